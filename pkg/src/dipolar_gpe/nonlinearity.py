"""Cubic plus dipolar nonlinearity, its fast-angle conjugates and their average."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import RepresentationError
from .kernel import DipoleAxis, KernelTable, convolve, kernel_table, v0_local_coefficient
from .spectral import Grid, Representation, WaveField, embed, hermite_basis, l2_norm

PARTS = ("cubic", "dipolar", "both")
_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model inputs. ``sigma = 0`` switches the contact term off."""

    d: int
    sigma: int
    lambda0: float
    axis: DipoleAxis
    epsilon: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if self.sigma not in (-1, 0, 1):
            raise ValueError("sigma must be -1, 0 or +1")
        if self.axis.d != self.d:
            raise ValueError("axis split does not match d")
        for name in ("epsilon", "alpha", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    @property
    def linear(self) -> bool:
        return self.sigma == 0 and self.lambda0 == 0


@dataclass(frozen=True)
class ThetaQuadrature:
    """Uniform nodes 2 pi j / n_theta on the fast-angle circle."""

    n_theta: int

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta % 2:
            raise ValueError("n_theta must be a positive even integer")

    @property
    def nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta


def default_quadrature(grid: Grid) -> ThetaQuadrature:
    """4 K_z + 2 nodes: exact for the trigonometric theta-dependence of resolved fields."""
    return ThetaQuadrature(4 * grid.K_z + 2)


def _table_for(grid: Grid, params: ModelParams, table: KernelTable | None) -> KernelTable | None:
    if params.lambda0 == 0:
        return None
    return table if table is not None else kernel_table(grid, params.axis, params.gamma)


def nonlinear_potential(u: np.ndarray, params: ModelParams, table: KernelTable | None,
                        parts: str = "both") -> np.ndarray:
    """Real effective potential sigma |u|^2 + 3 lambda0 V * |u|^2 (trailing three axes are the grid)."""
    if parts not in PARTS:
        raise ValueError(f"parts must be one of {PARTS}")
    rho = u.real**2 + u.imag**2
    pot = np.zeros(rho.shape)
    if parts != "dipolar" and params.sigma != 0:
        pot += params.sigma * rho
    if parts != "cubic" and params.lambda0 != 0:
        pot += 3.0 * params.lambda0 * convolve(rho, table)
    return pot


def _check(Phi: WaveField):
    if Phi.representation is not Representation.PHYSICAL:
        raise RepresentationError("nonlinearity needs a Physical field")


def eval_F(theta: float, Phi: WaveField, params: ModelParams, parts: str = "both",
           table: KernelTable | None = None) -> WaveField:
    """exp(i theta H_z) N(exp(-i theta H_z) Phi) with N(u) = (sigma|u|^2 + 3 lambda0 V*|u|^2) u."""
    _check(Phi)
    basis = hermite_basis(Phi.grid)
    table = _table_for(Phi.grid, params, table)
    u = basis.apply(Phi.values, theta)
    w = nonlinear_potential(u, params, table, parts) * u
    return Phi.replace(basis.apply(w, -theta))


def average_F(values: np.ndarray, grid: Grid, params: ModelParams, quad: ThetaQuadrature,
              table: KernelTable | None = None, parts: str = "both") -> np.ndarray:
    """Trapezoidal fast-angle average of F on a raw array; nodes processed in fixed-order chunks."""
    basis = hermite_basis(grid)
    table = _table_for(grid, params, table)
    coeffs = basis.analyze(values)
    rest = values - basis.synthesize(coeffs)
    nodes = quad.nodes
    chunk = max(1, int(_CHUNK_BYTES // (16 * values.size * 3)))
    acc_w = np.zeros(values.shape, dtype=complex)
    acc_c = np.zeros(coeffs.shape, dtype=complex)
    for start in range(0, nodes.size, chunk):
        th = nodes[start:start + chunk]
        down = basis.phases_batch(th)                      # exp(-i theta E)
        u = rest + basis.synthesize(down * coeffs)
        w = nonlinear_potential(u, params, table, parts) * u
        wc = basis.analyze(w)
        acc_w += np.sum(w, axis=0)
        acc_c += np.sum((np.conj(down) - 1.0) * wc, axis=0)
        del th, u, w, wc
    n = nodes.size
    return acc_w / n + basis.synthesize(acc_c / n)


def eval_F_av(Phi: WaveField, params: ModelParams, quad: ThetaQuadrature | None = None,
              table: KernelTable | None = None, parts: str = "both") -> WaveField:
    """(1/2pi) integral over theta of F(theta, Phi), by the uniform trapezoid rule."""
    _check(Phi)
    quad = quad or default_quadrature(Phi.grid)
    return Phi.replace(average_F(Phi.values, Phi.grid, params, quad, table, parts))


def reduced_potential(a: np.ndarray, k, grid: Grid, params: ModelParams,
                      table: KernelTable | None = None) -> np.ndarray:
    """Real x-potential P with G(a) = P a: integral over z of omega_k^2 (sigma|a omega_k|^2 + 3 lambda0 V*|a omega_k|^2)."""
    basis = hermite_basis(grid)
    if max(np.atleast_1d(k)) >= grid.K_z:
        raise ValueError(f"mode {k} not retained (K_z={grid.K_z})")
    a = np.asarray(a)
    if a.shape != grid.x_shape:
        raise ValueError(f"a must have the x-grid shape {grid.x_shape}")
    w = basis.mode_field(k)
    pot = nonlinear_potential(embed(a, grid, k), params, _table_for(grid, params, table))
    zsum = tuple(range(-grid.d, 0))
    return grid.hz**grid.d * np.sum(pot * w * w, axis=zsum)


def G_reduced(a: np.ndarray, k, grid: Grid, params: ModelParams,
              table: KernelTable | None = None) -> np.ndarray:
    """Nonlinearity of the equation for a mode-k polarized amplitude, G(a) = P(|a|) a.

    The reduction is closed when omega_k spans its H_z eigenspace (always in d = 1, and for
    k = (0, 0) in d = 2); degenerate modes in d = 2 can exchange mass within the eigenspace.
    """
    return reduced_potential(a, k, grid, params, table) * np.asarray(a)


def local_cubic_coefficient(k, grid: Grid, params: ModelParams) -> float:
    """Coefficient c in G = c |u|^2 u at gamma = 0 for z-radial modes: (sigma + 3 lambda0 c0) ||omega_k||_4^4."""
    w = hermite_basis(grid).mode_field(k)
    l4 = grid.hz**grid.d * np.sum(w**4)
    return (params.sigma + 3.0 * params.lambda0 * v0_local_coefficient(params.axis)) * l4


def lipschitz_probe(u: WaveField, v: WaveField, params: ModelParams,
                    quad: ThetaQuadrature | None = None, m: int = 0) -> float:
    """||F_av(u) - F_av(v)|| / ||u - v|| in L2."""
    if m != 0:
        raise ValueError("only m = 0 is supported")
    diff = l2_norm(u.values - v.values, u.grid)
    if diff == 0:
        raise ValueError("u and v must differ")
    Fu = eval_F_av(u, params, quad)
    Fv = eval_F_av(v, params, quad)
    return l2_norm(Fu.values - Fv.values, u.grid) / diff
