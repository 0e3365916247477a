"""Dipole-dipole Fourier multipliers and the spectral convolution K^gamma."""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .spectral import Grid, Representation, WaveField

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class DipoleAxis:
    """Unit dipole axis split as (n_x, n_z) across R^{3-d} x R^d."""

    n_x: tuple[float, ...]
    n_z: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "n_x", tuple(float(v) for v in self.n_x))
        object.__setattr__(self, "n_z", tuple(float(v) for v in self.n_z))
        if len(self.n_x) + len(self.n_z) != 3 or not self.n_z:
            raise ValueError("axis must split 3 components into (3-d, d) with d in {1,2}")
        norm2 = sum(v * v for v in self.n_x + self.n_z)
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"dipole axis must be a unit vector, |n|^2 = {norm2!r}")

    @classmethod
    def from_vector(cls, n, d: int) -> "DipoleAxis":
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(tuple(n[: 3 - d]), tuple(n[3 - d:]))

    @property
    def d(self) -> int:
        return len(self.n_z)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.n_x + self.n_z)

    @property
    def nz2(self) -> float:
        return float(sum(v * v for v in self.n_z))


def udip_hat(k, n) -> np.ndarray:
    """-1/3 + (k.n)^2/|k|^2 for 3-vectors ``k`` (last axis); k = 0 is rejected."""
    k = np.asarray(k, dtype=float)
    n = n.vector if isinstance(n, DipoleAxis) else np.asarray(n, dtype=float)
    k2 = np.sum(k * k, axis=-1)
    if np.any(k2 == 0):
        raise ValueError("udip_hat undefined at k = 0; apply the zero-mode convention")
    return -1.0 / 3.0 + (k @ n) ** 2 / k2


def vdip_hat(k_x, k_z, gamma: float, axis: DipoleAxis) -> np.ndarray:
    """Anisotropically rescaled multiplier, -1/3 + (gamma k_x.n_x + k_z.n_z)^2/(|gamma k_x|^2+|k_z|^2)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    k_x = np.asarray(k_x, dtype=float)
    k_z = np.asarray(k_z, dtype=float)
    num = gamma * (k_x @ np.array(axis.n_x)) + k_z @ np.array(axis.n_z)
    den = gamma**2 * np.sum(k_x**2, axis=-1) + np.sum(k_z**2, axis=-1)
    if np.any(den == 0):
        raise ValueError("degenerate wavenumber (gamma k_x, k_z) = 0")
    return -1.0 / 3.0 + num**2 / den


def w_split_hat(k_x, k_z, gamma: float, axis: DipoleAxis) -> tuple[np.ndarray, np.ndarray]:
    """Split of vdip_hat(gamma) - vdip_hat(0) into the parts W1 (even in k_z) and W2 (odd)."""
    k_x = np.asarray(k_x, dtype=float)
    k_z = np.asarray(k_z, dtype=float)
    kz2 = np.sum(k_z**2, axis=-1)
    if np.any(kz2 == 0):
        raise ValueError("w_split_hat needs k_z != 0")
    gkx2 = gamma**2 * np.sum(k_x**2, axis=-1)
    den = gkx2 + kz2
    a = k_x @ np.array(axis.n_x)
    b = k_z @ np.array(axis.n_z)
    w1 = -(b**2) * gkx2 / (den * kz2) + gamma**2 * a**2 / den
    w2 = 2.0 * gamma * a * b / den
    return w1, w2


def v0_local_coefficient(axis: DipoleAxis) -> float:
    """Constant c with V^0 * U = c U for z-radial U: the k_z-direction average of the gamma=0 symbol.

    Equals (3|n_z|^2 - d)/(3d); pointwise exact for every U when d = 1 or n_z = 0.
    """
    d = axis.d
    return (3.0 * axis.nz2 - d) / (3.0 * d)


def _cell_average_d1(g, s, nz2, a):
    # mean over k_z in [-a, a] of (p + k_z n_z)^2/(g^2 + k_z^2), with s = p/g
    out = np.full(g.shape, nz2)
    pos = g > 0
    gp = g[pos]
    out[pos] = nz2 + gp * (s[pos] ** 2 - nz2) * np.arctan(a / gp) / a
    return out


def _square_log_integral(g, a):
    # I0(g) = integral over [-a,a]^2 of dq/(g^2+|q|^2), times g^2
    phi = (np.pi / 8) * (_GL_NODES + 1.0)
    w = (np.pi / 8) * _GL_WEIGHTS
    c2 = np.cos(phi) ** 2
    g2 = g[..., None] ** 2
    return 4.0 * np.sum(w * g2 * np.log1p(a**2 / (g2 * c2)), axis=-1)


def _cell_average_d2(g, s, nz2, a):
    # mean over the square k_z-cell; cross terms vanish by symmetry
    out = np.full(g.shape, nz2 / 2.0)
    pos = g > 0
    g2I0 = _square_log_integral(g[pos], a)
    out[pos] = nz2 / 2.0 + (s[pos] ** 2 - nz2 / 2.0) * g2I0 / (4.0 * a * a)
    return out


def _reflect(arr: np.ndarray) -> np.ndarray:
    for ax in range(arr.ndim):
        arr = np.roll(np.flip(arr, axis=ax), 1, axis=ax)
    return arr


@dataclass(frozen=True, eq=False)
class KernelTable:
    """V^gamma multiplier sampled on the FFT wavenumbers of a grid.

    ``jacobian`` J (optional) evaluates the symbol at (J^{-T} k_x, k_z); this is the
    kernel seen in coordinates y with x = J y + c.
    """

    grid: Grid
    axis: DipoleAxis
    gamma: float
    multiplier: np.ndarray
    jacobian: tuple | None = None
    half: np.ndarray = field(repr=False, default=None)
    constant: float | None = None


def _build_multiplier(grid: Grid, axis: DipoleAxis, gamma: float, jac) -> np.ndarray:
    nd = grid.dim_x
    kx = [grid.wavenumbers[a] for a in range(nd)]
    if jac is not None:
        Jinv_T = np.linalg.inv(np.array(jac)).T
        kx = [sum(Jinv_T[i, j] * kx[j] for j in range(nd)) for i in range(nd)]
    kz = [grid.wavenumbers[a] for a in range(nd, 3)]
    gx = [gamma * c for c in kx]
    p = sum(c * n for c, n in zip(gx, axis.n_x))
    q = sum(c * n for c, n in zip(kz, axis.n_z))
    g2 = sum(c * c for c in gx)
    kz2 = sum(c * c for c in kz)
    p, q, g2, kz2 = np.broadcast_arrays(p, q, g2, kz2)
    table = np.empty(grid.shape)
    reg = kz2 > 0
    table[reg] = -1.0 / 3.0 + (p[reg] + q[reg]) ** 2 / (g2[reg] + kz2[reg])
    # degenerate k_z = 0 set: mean of the symbol over the surrounding k_z cell
    deg = ~reg
    g = np.sqrt(g2[deg])
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(g > 0, p[deg] / np.where(g > 0, g, 1.0), 0.0)
    a = 0.5 * (np.pi / grid.z_half_width)
    avg = (_cell_average_d1 if grid.d == 1 else _cell_average_d2)(g, s, axis.nz2, a)
    table[deg] = -1.0 / 3.0 + avg
    return 0.5 * (table + _reflect(table))


def _make_table(grid: Grid, axis: DipoleAxis, gamma: float, jac) -> KernelTable:
    mult = _build_multiplier(grid, axis, gamma, jac)
    mult.setflags(write=False)
    half = np.ascontiguousarray(mult[..., : grid.shape[-1] // 2 + 1])
    half.setflags(write=False)
    flat = mult.ravel()
    # constant up to roundoff (gamma = 0 with d = 1): the convolution is a scalar multiple
    const = float(flat[0]) if np.ptp(flat) <= 1e-15 else None
    return KernelTable(grid, axis, gamma, mult, jac, half, const)


_cached_table = functools.lru_cache(maxsize=64)(_make_table)


def kernel_table(grid: Grid, axis: DipoleAxis, gamma: float, jacobian=None) -> KernelTable:
    """Multiplier table for (grid, gamma, axis), cached; tables for a Jacobian J are built fresh."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if axis.d != grid.d:
        raise ValueError("axis split does not match grid dimension")
    jac = None
    if jacobian is not None:
        J = np.atleast_2d(np.asarray(jacobian, dtype=float))
        if not np.allclose(J, np.eye(grid.dim_x), rtol=0, atol=0):
            jac = tuple(map(tuple, J))
    if jac is not None:
        return _make_table(grid, axis, float(gamma), jac)
    return _cached_table(grid, axis, float(gamma), None)


def convolve(density: np.ndarray, table: KernelTable) -> np.ndarray:
    """Real spectral convolution over the trailing three axes (leading axes batch)."""
    if table.constant is not None:
        return table.constant * density
    shape = table.grid.shape
    rho_hat = sfft.rfftn(density, axes=(-3, -2, -1))
    return sfft.irfftn(rho_hat * table.half, s=shape, axes=(-3, -2, -1))


def apply_convolution(density: WaveField, table: KernelTable) -> WaveField:
    """K^gamma u = V^gamma * u for a real-valued Physical density."""
    if density.representation is not Representation.PHYSICAL:
        raise ValueError("density must be in Physical representation")
    vals = density.values
    if np.iscomplexobj(vals):
        scale = max(np.max(np.abs(vals)), 1e-300)
        if np.max(np.abs(vals.imag)) > 1e-12 * scale:
            raise ValueError("density must be real-valued")
        vals = vals.real
    return density.replace(convolve(vals, table))


def dump_multiplier_csv(table: KernelTable, path, fixed: dict | None = None) -> None:
    """Write a 2D slice of the table; axes not varied are pinned by ``fixed`` (default index 0).

    The varied axes are the first x axis and the first z axis.
    """
    grid = table.grid
    nd = grid.dim_x
    free = (0, nd)
    fixed = dict(fixed or {})
    ks = [grid.kx if a < nd else grid.kz for a in range(3)]
    names = [f"kx{i + 1}" for i in range(nd)] + [f"kz{i + 1}" for i in range(grid.d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["value"])
        order0 = np.argsort(ks[free[0]], kind="stable")
        order1 = np.argsort(ks[free[1]], kind="stable")
        for i in order0:
            for j in order1:
                idx = [fixed.get(a, 0) for a in range(3)]
                idx[free[0]], idx[free[1]] = i, j
                row = [repr(float(ks[a][idx[a]])) for a in range(3)]
                w.writerow(row + [repr(float(table.multiplier[tuple(idx)]))])
