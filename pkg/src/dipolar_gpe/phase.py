"""Quadratic eikonal phases, caustics, and the lab <-> filtered gauge maps.

A phase S(x) = x.Mx/2 + b.x + c evolves under dS/dt + |grad S|^2/2 + |x|^2/2 = 0.
With J(t) = cos t I + sin t M0 the solution is

    M(t) = (cos t M0 - sin t I) J^{-1},  b(t) = J^{-1} b0,
    c(t) = c0 - sin t b0.J^{-1}b0 / 2,

and the characteristics of grad S are x(t) = J(t) y + sin t b0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CausticError, RepresentationError
from .spectral import Frame, Grid, Representation, WaveField, hermite_basis

COND_LIMIT = 1e8


def caustic_time(M0) -> float:
    """First t > 0 where cos t I + sin t M0 is singular: min over eigenvalues mu of pi/2 + arctan(mu)."""
    mu = np.linalg.eigvalsh(np.atleast_2d(np.asarray(M0, dtype=float)))
    return float(np.min(np.pi / 2 + np.arctan(mu)))


@dataclass(frozen=True, eq=False)
class QuadraticPhase:
    """S(x) = x.Mx/2 + b.x + c, valid for a further ``t_caustic`` time units."""

    M: np.ndarray
    b: np.ndarray
    c: float = 0.0
    t_caustic: float = field(default=None)

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        n = M.shape[0]
        if M.shape != (n, n) or n not in (1, 2):
            raise ValueError("M must be a 1x1 or 2x2 matrix")
        if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
            raise ValueError("M must be symmetric")
        M = 0.5 * (M + M.T)
        b = np.broadcast_to(np.asarray(self.b, dtype=float), (n,)).copy()
        M.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        if self.t_caustic is None:
            object.__setattr__(self, "t_caustic", caustic_time(M))

    @classmethod
    def zero(cls, dim_x: int) -> "QuadraticPhase":
        return cls(np.zeros((dim_x, dim_x)), np.zeros(dim_x), 0.0)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    def value(self, x) -> np.ndarray:
        """S at points ``x`` of shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.M, x) + x @ self.b + self.c

    def gradient(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.M.T + self.b

    def laplacian(self) -> float:
        return float(np.trace(self.M))

    def on_grid(self, grid: Grid) -> np.ndarray:
        """S sampled on the x-grid, broadcastable against full grid arrays."""
        if grid.dim_x != self.dim:
            raise ValueError("phase dimension does not match grid")
        xs = grid.coords[: grid.dim_x]
        out = self.c + sum(self.b[i] * xs[i] for i in range(self.dim))
        for i in range(self.dim):
            for j in range(self.dim):
                out = out + 0.5 * self.M[i, j] * xs[i] * xs[j]
        return out

    def to_dict(self) -> dict:
        return {"M": self.M.tolist(), "b": self.b.tolist(), "c": self.c}


def flow_matrix(S0: QuadraticPhase, t: float) -> np.ndarray:
    """J(t) = cos t I + sin t M0, the Jacobian of the characteristic flow."""
    return np.cos(t) * np.eye(S0.dim) + np.sin(t) * S0.M


def flow_shift(S0: QuadraticPhase, t: float) -> np.ndarray:
    return np.sin(t) * S0.b


def _checked_flow(S0: QuadraticPhase, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t >= S0.t_caustic:
        raise CausticError(f"t={t} is past the caustic at {S0.t_caustic}")
    J = flow_matrix(S0, t)
    if np.linalg.cond(J) > COND_LIMIT:
        raise CausticError(f"flow matrix ill-conditioned at t={t}")
    return J


def evolve_phase(S0: QuadraticPhase, t: float) -> QuadraticPhase:
    """Closed-form eikonal solution at time ``t`` from data ``S0``."""
    if t == 0:
        return S0
    J = _checked_flow(S0, t)
    Jinv = np.linalg.inv(J)
    I = np.eye(S0.dim)
    M = (np.cos(t) * S0.M - np.sin(t) * I) @ Jinv
    b = Jinv @ S0.b
    c = S0.c - 0.5 * np.sin(t) * S0.b @ Jinv @ S0.b
    return QuadraticPhase(0.5 * (M + M.T), b, c, S0.t_caustic - t)


def integrated_inverse_square(S0: QuadraticPhase, t0: float, t1: float) -> np.ndarray:
    """Integral of J(s)^{-2} over [t0, t1], equal to [sin s J(s)^{-1}] between the limits."""
    J0 = _checked_flow(S0, t0) if t0 > 0 else np.eye(S0.dim)
    J1 = _checked_flow(S0, t1) if t1 > 0 else np.eye(S0.dim)
    return np.sin(t1) * np.linalg.inv(J1) - np.sin(t0) * np.linalg.inv(J0)


def riccati_rhs(M, b):
    return -(M @ M + np.eye(M.shape[0])), -M @ b, -0.5 * b @ b


def riccati_rk4(S0: QuadraticPhase, t: float, n_steps: int = 2000) -> tuple[np.ndarray, np.ndarray, float]:
    """Classical fourth-order integration of the Riccati system; a cross-check, not the production path."""
    M, b, c = S0.M.copy(), S0.b.copy(), S0.c
    h = t / n_steps
    for _ in range(n_steps):
        k1 = riccati_rhs(M, b)
        k2 = riccati_rhs(M + 0.5 * h * k1[0], b + 0.5 * h * k1[1])
        k3 = riccati_rhs(M + 0.5 * h * k2[0], b + 0.5 * h * k2[1])
        k4 = riccati_rhs(M + h * k3[0], b + h * k3[1])
        M = M + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        b = b + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        c = c + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return M, b, c


def eikonal_residual(S0: QuadraticPhase, t: float, x) -> np.ndarray:
    """dS/dt + |grad S|^2/2 + |x|^2/2 at points x, with dS/dt from the Riccati right-hand side."""
    St = evolve_phase(S0, t)
    x = np.asarray(x, dtype=float)
    dM, db, dc = riccati_rhs(St.M, St.b)
    dS = 0.5 * np.einsum("...i,ij,...j->...", x, dM, x) + x @ db + dc
    g = St.gradient(x)
    return dS + 0.5 * np.sum(g * g, axis=-1) + 0.5 * np.sum(x * x, axis=-1)


@dataclass(frozen=True)
class FrameStamp:
    """Time and scales fixing the gauge between lab and filtered frames.

    ``phase`` is the phase at time ``t``. ``epsilon = 0`` denotes the averaged
    model, whose state carries no fast transversal oscillation; only the WKB
    gauge is then applied.
    """

    t: float
    epsilon: float
    alpha: float
    phase: QuadraticPhase

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.phase.t_caustic > 0:
            raise CausticError("phase is not valid at the stamped time")

    @classmethod
    def at(cls, t: float, epsilon: float, alpha: float, S0: QuadraticPhase) -> "FrameStamp":
        return cls(t, epsilon, alpha, evolve_phase(S0, t))


def _fast_angle(stamp: FrameStamp) -> float:
    return 0.0 if stamp.epsilon == 0 else stamp.t / stamp.epsilon**2


def to_filtered(psi: WaveField, stamp: FrameStamp) -> WaveField:
    """A = exp(i t H_z / eps^2) exp(-i S / alpha) psi."""
    if psi.representation is not Representation.PHYSICAL or psi.frame is not Frame.LAB:
        raise RepresentationError("to_filtered needs a Physical, Lab-frame field")
    grid = psi.grid
    u = np.exp(-1j * stamp.phase.on_grid(grid) / stamp.alpha) * psi.values
    theta = _fast_angle(stamp)
    if theta != 0.0:
        u = hermite_basis(grid).apply(u, -theta)
    return psi.replace(u, frame=Frame.FILTERED)


def from_filtered(A: WaveField, stamp: FrameStamp) -> WaveField:
    """psi = exp(-i t H_z / eps^2) exp(i S / alpha) A."""
    if A.representation is not Representation.PHYSICAL or A.frame is not Frame.FILTERED:
        raise RepresentationError("from_filtered needs a Physical, Filtered-frame field")
    grid = A.grid
    theta = _fast_angle(stamp)
    u = A.values if theta == 0.0 else hermite_basis(grid).apply(A.values, theta)
    u = np.exp(1j * stamp.phase.on_grid(grid) / stamp.alpha) * u
    return A.replace(u, frame=Frame.LAB)
