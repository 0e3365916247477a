"""Grids, unitary FFTs, the transversal Hermite machinery and discrete norms.

Arrays live on a tensor grid of R^{3-d}_x x R^d_z; the x axes come first,
then the z axes. Every direction is a uniform periodic grid
``-L + j*h, j = 0..n-1`` with ``h = 2L/n``.
"""
from __future__ import annotations

import enum
import functools
import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import BoundaryMassError, RepresentationError, TruncationWarning

LEAKAGE_THRESHOLD = 1e-8


def _is_pow2(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Tensor grid with ``3 - d`` x-directions and ``d`` z-directions."""

    d: int
    x_half_width: float
    n_x: int
    z_half_width: float
    n_z: int
    K_z: int

    @property
    def dim_x(self) -> int:
        return 3 - self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_x,) * self.dim_x + (self.n_z,) * self.d

    @property
    def x_axes(self) -> tuple[int, ...]:
        return tuple(range(self.dim_x))

    @property
    def z_axes(self) -> tuple[int, ...]:
        return tuple(range(self.dim_x, 3))

    @property
    def hx(self) -> float:
        return 2.0 * self.x_half_width / self.n_x

    @property
    def hz(self) -> float:
        return 2.0 * self.z_half_width / self.n_z

    @property
    def dV(self) -> float:
        return self.hx ** self.dim_x * self.hz ** self.d

    @cached_property
    def x(self) -> np.ndarray:
        return -self.x_half_width + self.hx * np.arange(self.n_x)

    @cached_property
    def z(self) -> np.ndarray:
        return -self.z_half_width + self.hz * np.arange(self.n_z)

    @cached_property
    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.n_x, d=self.hx)

    @cached_property
    def kz(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.n_z, d=self.hz)

    def along(self, v: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a 1D array so that it broadcasts along ``axis`` of the grid."""
        shape = [1, 1, 1]
        shape[axis] = v.size
        return v.reshape(shape)

    @cached_property
    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis (x first)."""
        return [self.along(self.x if a < self.dim_x else self.z, a) for a in range(3)]

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        return [self.along(self.kx if a < self.dim_x else self.kz, a) for a in range(3)]

    @cached_property
    def x_mesh(self) -> np.ndarray:
        """x-grid points, shape ``(n_x**(3-d), 3-d)`` in C order."""
        mesh = np.meshgrid(*([self.x] * self.dim_x), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def x_shape(self) -> tuple[int, ...]:
        return (self.n_x,) * self.dim_x

    @cached_property
    def z_shape(self) -> tuple[int, ...]:
        return (self.n_z,) * self.d

    def r2(self) -> np.ndarray:
        """|x|^2 + |z|^2 on the grid."""
        return sum(c**2 for c in self.coords)

    def x2(self) -> np.ndarray:
        return sum(c**2 for c in self.coords[: self.dim_x])

    def describe(self) -> str:
        return (f"d={self.d};Lx={self.x_half_width:g};nx={self.n_x};"
                f"Lz={self.z_half_width:g};nz={self.n_z};Kz={self.K_z}")


def make_grid(d: int, x_half_width: float, n_x: int, z_half_width: float, n_z: int,
              K_z: int | None = None) -> Grid:
    """Build a grid; ``K_z`` defaults to ``n_z`` (complete transversal basis)."""
    if d not in (1, 2):
        raise ValueError(f"d must be 1 or 2, got {d}")
    if not (_is_pow2(n_x) and _is_pow2(n_z)):
        raise ValueError(f"grid sizes must be powers of two, got n_x={n_x}, n_z={n_z}")
    if K_z is None:
        K_z = n_z
    if not 1 <= K_z <= n_z:
        raise ValueError(f"need 1 <= K_z <= n_z, got K_z={K_z}, n_z={n_z}")
    if x_half_width <= 0 or z_half_width <= 0:
        raise ValueError("half-widths must be positive")
    return Grid(int(d), float(x_half_width), int(n_x), float(z_half_width), int(n_z), int(K_z))


class Representation(enum.Enum):
    PHYSICAL = "physical"
    FOURIER = "fourier"


class Frame(enum.Enum):
    LAB = "lab"
    FILTERED = "filtered"


@dataclass(frozen=True, eq=False)
class WaveField:
    grid: Grid
    values: np.ndarray
    representation: Representation = Representation.PHYSICAL
    frame: Frame = Frame.LAB

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def replace(self, values=None, representation=None, frame=None) -> "WaveField":
        return WaveField(self.grid,
                         self.values if values is None else values,
                         self.representation if representation is None else representation,
                         self.frame if frame is None else frame)

    def norm(self) -> float:
        return l2_norm(self.values, self.grid)


def l2_norm(values: np.ndarray, grid: Grid) -> float:
    """Discrete L2 norm; valid in either representation under the unitary FFT."""
    return float(np.sqrt(grid.dV * np.vdot(values, values).real))


def transform(field: WaveField, direction: str) -> WaveField:
    """Unitary FFT over all three axes. ``direction`` is 'forward' or 'inverse'."""
    if direction == "forward":
        if field.representation is not Representation.PHYSICAL:
            raise RepresentationError("forward transform needs a Physical field")
        return field.replace(sfft.fftn(field.values, norm="ortho"), Representation.FOURIER)
    if direction == "inverse":
        if field.representation is not Representation.FOURIER:
            raise RepresentationError("inverse transform needs a Fourier field")
        return field.replace(sfft.ifftn(field.values, norm="ortho"), Representation.PHYSICAL)
    raise ValueError(f"unknown direction {direction!r}")


# --- transversal Hermite basis -------------------------------------------------

def hermite_functions(z: np.ndarray, K: int) -> np.ndarray:
    """Normalized Hermite functions omega_0..omega_{K-1} at points ``z``; shape (len(z), K).

    Uses the three-term recurrence, stable for large orders.
    """
    out = np.empty((z.size, K))
    out[:, 0] = np.pi**-0.25 * np.exp(-z**2 / 2)
    if K > 1:
        out[:, 1] = np.sqrt(2.0) * z * out[:, 0]
    for n in range(1, K - 1):
        out[:, n + 1] = np.sqrt(2.0 / (n + 1)) * z * out[:, n] - np.sqrt(n / (n + 1)) * out[:, n - 1]
    return out


class HermiteBasis:
    """Sampled eigenfunctions of H_z on the z-grid, orthonormalized for the grid quadrature.

    ``modes[:, k]`` is omega_k on the 1D z-grid. In d = 2 the retained modes are the
    products omega_{k1}(z1) omega_{k2}(z2) with k1, k2 < K_z, eigenvalue k1 + k2.
    Content orthogonal to the retained span is left untouched by the propagator.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.K_z = grid.K_z
        h = grid.hz
        raw = hermite_functions(grid.z, grid.K_z)
        q, r = np.linalg.qr(np.sqrt(h) * raw)
        q *= np.sign(np.diag(r))
        self.modes = q / np.sqrt(h)
        self._h = h
        k = np.arange(grid.K_z)
        self.eigenvalues = k if grid.d == 1 else k[:, None] + k[None, :]

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Hermite coefficients over the trailing z axes (leading axes are batch/x)."""
        B = self.modes
        if self.grid.d == 1:
            return self._h * (values @ B)
        return self._h**2 * (B.T @ values @ B)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        B = self.modes
        if self.grid.d == 1:
            return coeffs @ B.T
        return B @ coeffs @ B.T

    def phases(self, theta: float) -> np.ndarray:
        return np.exp(-1j * theta * self.eigenvalues)

    def phases_batch(self, thetas: np.ndarray) -> np.ndarray:
        """Phases for several angles, shaped to broadcast against a stack of coefficient arrays."""
        th = np.asarray(thetas, dtype=float).reshape((-1,) + (1,) * (self.grid.dim_x + self.grid.d))
        return np.exp(-1j * th * self.eigenvalues)

    def apply(self, values: np.ndarray, theta: float) -> np.ndarray:
        """exp(-i theta H_z) on raw arrays; identity on the out-of-band remainder."""
        c = self.analyze(values)
        return values + self.synthesize((self.phases(theta) - 1.0) * c)

    def leakage(self, values: np.ndarray) -> float:
        """Fraction of L2 energy outside the retained modes."""
        rest = values - self.synthesize(self.analyze(values))
        tot = np.vdot(values, values).real
        return float(np.vdot(rest, rest).real / tot) if tot > 0 else 0.0

    def mode_field(self, k) -> np.ndarray:
        """omega_k sampled on the z-grid (shape ``grid.z_shape``)."""
        if self.grid.d == 1:
            k = int(np.atleast_1d(k)[0])
            if k >= self.K_z:
                raise ValueError(f"mode {k} not retained (K_z={self.K_z})")
            return self.modes[:, k].copy()
        k1, k2 = k
        if max(k1, k2) >= self.K_z:
            raise ValueError(f"mode {k} not retained (K_z={self.K_z})")
        return np.outer(self.modes[:, k1], self.modes[:, k2])


@functools.lru_cache(maxsize=32)
def hermite_basis(grid: Grid) -> HermiteBasis:
    return HermiteBasis(grid)


def propagate_Hz(field: WaveField, theta: float, check: bool = False) -> WaveField:
    """Apply exp(-i theta H_z) by Hermite analysis, phase per total degree, synthesis."""
    if field.representation is not Representation.PHYSICAL:
        raise RepresentationError("propagate_Hz needs a Physical field")
    basis = hermite_basis(field.grid)
    if check:
        leak = basis.leakage(field.values)
        if leak > LEAKAGE_THRESHOLD:
            warnings.warn(f"transversal leakage {leak:.3e} exceeds {LEAKAGE_THRESHOLD:g}",
                          TruncationWarning, stacklevel=2)
    return field.replace(basis.apply(field.values, theta))


def embed(a: np.ndarray, grid: Grid, k=0) -> np.ndarray:
    """Tensor product a(x) * omega_k(z) on the full grid."""
    w = hermite_basis(grid).mode_field(k)
    return np.multiply.outer(a, w)


# --- norms ----------------------------------------------------------------------

def discrete_B_norm(field: WaveField, m: int) -> float:
    """Discrete harmonic-oscillator Sobolev norm.

    ``sum_{|kappa|<=m} ||d^kappa u||^2 + sum_{1<=j<=m} || |x|^j u ||^2`` with spectral
    derivatives and the full 3D position. m = 0 is the L2 norm.
    """
    if m not in (0, 1, 2, 3):
        raise ValueError(f"unsupported m={m}; use 0..3")
    if field.representation is not Representation.PHYSICAL:
        raise RepresentationError("discrete_B_norm needs a Physical field")
    grid = field.grid
    u = field.values
    if m == 0:
        return l2_norm(u, grid)
    uh2 = np.abs(sfft.fftn(u, norm="ortho")) ** 2
    k2 = [w**2 for w in grid.wavenumbers]
    weight = np.zeros(grid.shape)
    for kappa in itertools.product(range(m + 1), repeat=3):
        if sum(kappa) <= m:
            weight = weight + k2[0] ** kappa[0] * k2[1] ** kappa[1] * k2[2] ** kappa[2]
    total = np.sum(weight * uh2)
    r2 = grid.r2()
    u2 = np.abs(u) ** 2
    for j in range(1, m + 1):
        total += np.sum(r2**j * u2)
    return float(np.sqrt(grid.dV * total))


# --- affine resampling ----------------------------------------------------------

def _interp_matrix(y: np.ndarray, n: int, L: float) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant (Nyquist mode as a cosine) at ``y``."""
    k = 2.0 * np.pi * sfft.fftfreq(n, d=2.0 * L / n)
    arg = np.outer(y + L, k)
    E = np.exp(1j * arg)
    E[:, n // 2] = np.cos(arg[:, n // 2])
    return E


def resample_affine(field: WaveField, linear_map, shift, check_boundary: bool = True,
                    tol: float = 1e-8) -> WaveField:
    """Evaluate the x-interpolant of ``field`` at ``linear_map @ x + shift`` for every grid x.

    The z-direction is untouched.
    """
    if field.representation is not Representation.PHYSICAL:
        raise RepresentationError("resample_affine needs a Physical field")
    grid = field.grid
    nd = grid.dim_x
    A = np.atleast_2d(np.asarray(linear_map, dtype=float))
    if A.shape == (1, 1) and nd > 1:
        A = A[0, 0] * np.eye(nd)
    b = np.broadcast_to(np.asarray(shift, dtype=float), (nd,))
    if A.shape != (nd, nd):
        raise ValueError(f"linear map must be {nd}x{nd}")
    if not np.all(np.isfinite(A)) or abs(np.linalg.det(A)) < 1e-12 or np.linalg.cond(A) > 1e12:
        raise ValueError("singular linear map")
    L, n = grid.x_half_width, grid.n_x
    targets = grid.x_mesh @ A.T + b
    coeffs = sfft.fftn(field.values, axes=grid.x_axes) / n**nd
    zshape = grid.z_shape
    if nd == 1:
        out = _interp_matrix(targets[:, 0], n, L) @ coeffs.reshape(n, -1)
    else:
        E1 = _interp_matrix(targets[:, 0], n, L)
        E2 = _interp_matrix(targets[:, 1], n, L)
        tmp = (E1 @ coeffs.reshape(n, -1)).reshape(-1, n, int(np.prod(zshape)))
        out = np.einsum("tb,tbz->tz", E2, tmp)
    out = out.reshape(grid.shape)
    if check_boundary:
        outside = np.any((targets < -L) | (targets >= L), axis=1).reshape(grid.x_shape)
        if outside.any():
            w = np.sum(np.abs(out) ** 2, axis=grid.z_axes)
            frac = w[outside].sum() / max(w.sum(), 1e-300)
            if frac > tol:
                raise BoundaryMassError(f"mapped points leave the box carrying {frac:.2e} of the mass")
    if np.isrealobj(field.values):
        out = out.real
    return field.replace(out)
