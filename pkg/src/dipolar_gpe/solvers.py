"""Time integrators for the full model and its averaged, transport and polarized limits.

Eulerian solvers (full, averaged) evolve the lab-frame wave function. Transport
solvers evolve the filtered amplitude in Lagrangian coordinates y, where
x = J(t) y + sin t b0 follows the exact affine characteristics of the phase;
states are resampled onto the Eulerian grid only when recorded.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import CausticError, StepSizeError
from .kernel import KernelTable, kernel_table
from .nonlinearity import (ModelParams, ThetaQuadrature, average_F,
                           default_quadrature, nonlinear_potential,
                           reduced_potential)
from .phase import (FrameStamp, QuadraticPhase, evolve_phase, flow_matrix, flow_shift,
                    integrated_inverse_square, to_filtered)
from .spectral import (Frame, Grid, WaveField, discrete_B_norm, embed, hermite_basis, l2_norm,
                       resample_affine)

MASS_TOL = 1e-8


class Variant(enum.Enum):
    FULL = "full"
    AVERAGED = "averaged"
    TRANSPORT_OSCILLATORY = "transport_oscillatory"
    TRANSPORT_LIMIT = "transport_limit"
    POLARIZED = "polarized"


@dataclass(frozen=True)
class SolverConfig:
    """One run. ``record_stride`` = steps between snapshots (0: initial and final only).

    ``mode`` is the Hermite index for the polarized variant. ``n_theta`` overrides
    the default fast-angle quadrature size.
    """

    T_final: float
    dt: float
    grid: Grid
    params: ModelParams
    variant: Variant
    phase: QuadraticPhase | None = None
    record_stride: int = 0
    mode: int | tuple = 0
    n_theta: int | None = None

    def __post_init__(self):
        if not self.T_final > 0 or not self.dt > 0:
            raise ValueError("T_final and dt must be positive")
        if self.record_stride < 0:
            raise ValueError("record_stride must be nonnegative")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.T_final / self.dt - 1e-9))

    @property
    def step(self) -> float:
        return self.T_final / self.n_steps

    @property
    def initial_phase(self) -> QuadraticPhase:
        return self.phase if self.phase is not None else QuadraticPhase.zero(self.grid.dim_x)

    @property
    def quadrature(self) -> ThetaQuadrature:
        return ThetaQuadrature(self.n_theta) if self.n_theta else default_quadrature(self.grid)


@dataclass
class Trajectory:
    """Recorded snapshots and diagnostics of one run.

    ``states`` are lab-frame fields for the Eulerian variants and filtered-frame
    fields on the Eulerian grid for the transport variants. The B2 norm doubles
    as the energy-like functional.
    """

    variant: Variant
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    max_mod: list = field(default_factory=list)
    b0_norm: list = field(default_factory=list)
    b2_norm: list = field(default_factory=list)
    reduced: list = field(default_factory=list)

    def record(self, t: float, state: WaveField, reduced=None):
        self.times.append(float(t))
        self.states.append(state)
        n0 = state.norm()
        self.mass.append(n0**2)
        self.max_mod.append(float(np.max(np.abs(state.values))))
        self.b0_norm.append(n0)
        self.b2_norm.append(discrete_B_norm(state, 2))
        if reduced is not None:
            self.reduced.append(reduced)

    @property
    def final(self) -> WaveField:
        return self.states[-1]

    def mass_drift(self) -> float:
        return float(np.max(np.abs(np.array(self.mass) - self.mass[0])))


def _record_steps(cfg: SolverConfig) -> set:
    n = cfg.n_steps
    if cfg.record_stride == 0:
        return {n}
    return set(range(cfg.record_stride, n + 1, cfg.record_stride)) | {n}


def _check_fast_step(cfg: SolverConfig):
    eps = cfg.params.epsilon
    if not eps > 0:
        raise ValueError("this variant needs epsilon > 0")
    if cfg.dt > eps**2 / 10 * (1 + 1e-12):
        raise StepSizeError(f"dt={cfg.dt} exceeds the resolution bound eps^2/10={eps**2 / 10}")


def _check_normalized(values, grid, what="initial data"):
    n = l2_norm(values, grid)
    if abs(n - 1.0) > 1e-6:
        raise ValueError(f"{what} must be L2-normalized, got norm {n}")


def _x_fft(values, grid: Grid, inverse=False):
    f = sfft.ifftn if inverse else sfft.fftn
    return f(values, axes=grid.x_axes, norm="ortho")


def _x_wavenumbers(grid: Grid):
    return grid.wavenumbers[: grid.dim_x]


class OscillatorStep:
    """Exact exp(-i t (-(alpha/2) Lap_x + |x|^2/(2 alpha))) as chirp, kinetic, chirp.

    With tau = tan(t/2), s = sin t the propagator factors exactly into
    multiplication by exp(-i tau |x|^2/(2 alpha)), the Fourier multiplier
    exp(-i s alpha |k|^2/2), and the same chirp again.
    """

    def __init__(self, grid: Grid, alpha: float, t: float):
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        tau = math.tan(t / 2)
        s = math.sin(t)
        x2 = sum(c**2 for c in grid.coords[: grid.dim_x])
        k2 = sum(k**2 for k in _x_wavenumbers(grid))
        self.grid = grid
        self.chirp = np.exp(-1j * tau * x2 / (2 * alpha))
        self.kinetic = np.exp(-1j * s * alpha * k2 / 2)

    def __call__(self, values):
        u = self.chirp * values
        u = _x_fft(self.kinetic * _x_fft(u, self.grid), self.grid, inverse=True)
        return self.chirp * u


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# --- Eulerian solvers -------------------------------------------------------------

def solve_full(psi0: WaveField, cfg: SolverConfig) -> Trajectory:
    """Strang splitting of the rescaled GPE: exact linear half steps around an exact potential phase.

    The linear half step combines the transversal propagator (Hermite phases at
    theta = dt/(2 eps^2)) with the exact x-oscillator; the middle step multiplies
    by exp(-i dt (sigma|psi|^2 + 3 lambda0 V*|psi|^2)), exact because |psi| is frozen.
    """
    if cfg.variant is not Variant.FULL:
        raise ValueError("cfg.variant must be FULL")
    if psi0.frame is not Frame.LAB:
        raise ValueError("initial data must be in the Lab frame")
    _check_fast_step(cfg)
    grid, params = cfg.grid, cfg.params
    _check_normalized(psi0.values, grid)
    dt, n = cfg.step, cfg.n_steps
    basis = hermite_basis(grid)
    osc = OscillatorStep(grid, params.alpha, dt / 2)
    theta_half = dt / (2 * params.epsilon**2)
    table = kernel_table(grid, params.axis, params.gamma) if params.lambda0 else None

    def linear_half(u):
        return osc(basis.apply(u, theta_half))

    traj = Trajectory(cfg.variant)
    traj.record(0.0, psi0)
    records = _record_steps(cfg)
    u = psi0.values.astype(complex)
    for j in range(1, n + 1):
        u = linear_half(u)
        if not params.linear:
            u = u * np.exp(-1j * dt * nonlinear_potential(u, params, table))
        u = linear_half(u)
        if j in records:
            traj.record(j * dt, psi0.replace(u))
    return traj


def solve_averaged(phi0: WaveField, cfg: SolverConfig) -> Trajectory:
    """Strang splitting of the averaged equation: exact oscillator half steps, RK4 on F_av."""
    if cfg.variant is not Variant.AVERAGED:
        raise ValueError("cfg.variant must be AVERAGED")
    if phi0.frame is not Frame.LAB:
        raise ValueError("initial data must be in the Lab frame")
    grid, params = cfg.grid, cfg.params
    _check_normalized(phi0.values, grid)
    dt, n = cfg.step, cfg.n_steps
    osc = OscillatorStep(grid, params.alpha, dt / 2)
    quad = cfg.quadrature
    table = kernel_table(grid, params.axis, params.gamma) if params.lambda0 else None

    def rhs(v):
        return -1j * average_F(v, grid, params, quad, table)

    traj = Trajectory(cfg.variant)
    traj.record(0.0, phi0)
    records = _record_steps(cfg)
    u = phi0.values.astype(complex)
    for j in range(1, n + 1):
        u = osc(u)
        if not params.linear:
            u = _rk4(rhs, u, dt)
        u = osc(u)
        if j in records:
            traj.record(j * dt, phi0.replace(u))
    return traj


# --- Lagrangian transport solvers ---------------------------------------------------

class _Characteristics:
    """Affine flow x = J(t) y + sin t b0 of the phase, with the alpha-term multipliers."""

    def __init__(self, grid: Grid, S0: QuadraticPhase, T: float):
        if S0.dim != grid.dim_x:
            raise ValueError("phase dimension does not match grid")
        if T >= S0.t_caustic:
            raise CausticError(f"T_final={T} reaches the caustic at t={S0.t_caustic:.6f}")
        self.grid = grid
        self.S0 = S0
        self.k = _x_wavenumbers(grid)

    def jacobian(self, t):
        return flow_matrix(self.S0, t)

    def det(self, t) -> float:
        return abs(float(np.linalg.det(self.jacobian(t))))

    def alpha_multiplier(self, alpha: float, t0: float, t1: float):
        Q = integrated_inverse_square(self.S0, t0, t1)
        nd = self.grid.dim_x
        quad = sum(Q[i, j] * self.k[i] * self.k[j] for i in range(nd) for j in range(nd))
        return np.exp(-0.5j * alpha * quad)

    def to_eulerian(self, values: np.ndarray, t: float, template: WaveField) -> WaveField:
        """A(x) = B(J^{-1}(x - sin t b0)) |det J|^{-1/2}."""
        if t == 0:
            return template.replace(values, frame=Frame.FILTERED)
        J = self.jacobian(t)
        Jinv = np.linalg.inv(J)
        shift = -Jinv @ flow_shift(self.S0, t)
        out = resample_affine(template.replace(values), Jinv, shift)
        return out.replace(out.values / math.sqrt(self.det(t)), frame=Frame.FILTERED)


def _apply_x_multiplier(values, mult, grid):
    return _x_fft(mult * _x_fft(values, grid), grid, inverse=True)


def solve_transport(A0: WaveField, cfg: SolverConfig) -> Trajectory:
    """Filtered amplitude along exact characteristics.

    TRANSPORT_OSCILLATORY keeps the fast angle t/eps^2 (dt <= eps^2/10) and
    TRANSPORT_LIMIT uses the averaged nonlinearity. ``params.alpha = 0`` drops the
    dispersive term; alpha > 0 gives the full filtered model in the oscillatory case.
    """
    if cfg.variant not in (Variant.TRANSPORT_OSCILLATORY, Variant.TRANSPORT_LIMIT):
        raise ValueError("cfg.variant must be a transport variant")
    if A0.frame is not Frame.FILTERED:
        raise ValueError("initial data must be in the Filtered frame")
    grid, params = cfg.grid, cfg.params
    oscillatory = cfg.variant is Variant.TRANSPORT_OSCILLATORY
    if oscillatory:
        _check_fast_step(cfg)
    dt, n = cfg.step, cfg.n_steps
    chars = _Characteristics(grid, cfg.initial_phase, cfg.T_final)
    basis = hermite_basis(grid)
    quad = cfg.quadrature
    alpha = params.alpha

    def table_at(t) -> KernelTable | None:
        if not params.lambda0:
            return None
        return kernel_table(grid, params.axis, params.gamma, chars.jacobian(t))

    traj = Trajectory(cfg.variant)
    traj.record(0.0, A0)
    records = _record_steps(cfg)
    # oscillatory: carry C = exp(-i t H_z/eps^2) B so the fast phase is an exact linear substep
    u = A0.values.astype(complex)
    theta_half = dt / (2 * params.epsilon**2) if oscillatory else 0.0

    def linear(v, t0, t1):
        if alpha > 0:
            v = _apply_x_multiplier(v, chars.alpha_multiplier(alpha, t0, t1), grid)
        if oscillatory:
            v = basis.apply(v, theta_half)
        return v

    for j in range(1, n + 1):
        t0 = (j - 1) * dt
        tm = t0 + 0.5 * dt
        u = linear(u, t0, tm)
        if not params.linear:
            table = table_at(tm)
            scale = 1.0 / chars.det(tm)
            if oscillatory:
                u = u * np.exp(-1j * dt * scale * nonlinear_potential(u, params, table))
            else:
                u = _rk4(lambda v: -1j * scale * average_F(v, grid, params, quad, table), u, dt)
        u = linear(u, tm, j * dt)
        if j in records:
            t = j * dt
            b = basis.apply(u, -t / params.epsilon**2) if oscillatory else u
            traj.record(t, chars.to_eulerian(b, t, A0))
    return traj


def solve_polarized(a0: np.ndarray, cfg: SolverConfig) -> Trajectory:
    """Reduced transport on a single Hermite mode with nonlinearity G_reduced.

    Recorded states are the filtered amplitudes a(t) (x) omega_k on the full grid;
    ``Trajectory.reduced`` holds the Eulerian x-profiles.
    """
    if cfg.variant is not Variant.POLARIZED:
        raise ValueError("cfg.variant must be POLARIZED")
    grid, params = cfg.grid, cfg.params
    k = cfg.mode
    a0 = np.asarray(a0, dtype=complex)
    if a0.shape != grid.x_shape:
        raise ValueError("a0 must live on the x-grid")
    dt, n = cfg.step, cfg.n_steps
    chars = _Characteristics(grid, cfg.initial_phase, cfg.T_final)
    alpha = params.alpha
    x_axes = tuple(range(grid.dim_x))
    k_x = [kk.reshape(kk.shape[: grid.dim_x]) for kk in _x_wavenumbers(grid)]

    def x_mult(t0, t1):
        Q = integrated_inverse_square(chars.S0, t0, t1)
        nd = grid.dim_x
        quad = sum(Q[i, jj] * k_x[i] * k_x[jj] for i in range(nd) for jj in range(nd))
        return np.exp(-0.5j * alpha * quad)

    def linear(v, t0, t1):
        if alpha > 0:
            v = sfft.ifftn(x_mult(t0, t1) * sfft.fftn(v, axes=x_axes, norm="ortho"),
                           axes=x_axes, norm="ortho")
        return v

    template = WaveField(grid, embed(a0, grid, k), frame=Frame.FILTERED)

    def emit(t, v):
        full = chars.to_eulerian(embed(v, grid, k), t, template)
        red = hermite_basis(grid).mode_field(k)
        zsum = tuple(range(-grid.d, 0))
        profile = grid.hz**grid.d * np.sum(full.values * red, axis=zsum)
        traj.record(t, full, profile)

    traj = Trajectory(cfg.variant)
    emit(0.0, a0)
    records = _record_steps(cfg)
    u = a0
    for j in range(1, n + 1):
        t0 = (j - 1) * dt
        tm = t0 + 0.5 * dt
        u = linear(u, t0, tm)
        if not params.linear:
            table = (kernel_table(grid, params.axis, params.gamma, chars.jacobian(tm))
                     if params.lambda0 else None)
            scale = 1.0 / chars.det(tm)
            # the reduced potential is real and depends on |u| only: exact phase step
            u = u * np.exp(-1j * dt * scale * reduced_potential(u, k, grid, params, table))
        u = linear(u, tm, j * dt)
        if j in records:
            emit(j * dt, u)
    return traj


def solve(initial: WaveField, cfg: SolverConfig) -> Trajectory:
    """Dispatch on ``cfg.variant``; polarized runs take the mode-k profile of ``initial``."""
    v = cfg.variant
    if v is Variant.FULL:
        return solve_full(initial, cfg)
    if v is Variant.AVERAGED:
        return solve_averaged(initial, cfg)
    if v is Variant.POLARIZED:
        w = hermite_basis(cfg.grid).mode_field(cfg.mode)
        zsum = tuple(range(-cfg.grid.d, 0))
        a0 = cfg.grid.hz**cfg.grid.d * np.sum(initial.values * w, axis=zsum)
        return solve_polarized(a0, cfg)
    return solve_transport(initial, cfg)


def filtered_state(traj: Trajectory, cfg: SolverConfig, index: int = -1) -> WaveField:
    """Snapshot ``index`` mapped to the Filtered frame (identity for transport variants)."""
    state = traj.states[index]
    if state.frame is Frame.FILTERED:
        return state
    t = traj.times[index]
    eps = cfg.params.epsilon if cfg.variant is Variant.FULL else 0.0
    stamp = FrameStamp(t, eps, cfg.params.alpha, evolve_phase(cfg.initial_phase, t))
    return to_filtered(state, stamp)


# --- export -----------------------------------------------------------------------

DUMP_MAGIC = b"DGPETRAJ1\n"


def dump_trajectory(traj: Trajectory, path) -> None:
    """Binary snapshot dump: magic line, one JSON header line, then little-endian
    float64 data with real and imaginary parts interleaved, snapshot after snapshot."""
    grid = traj.states[0].grid
    header = {"grid": grid.describe(), "shape": list(grid.shape), "variant": traj.variant.value,
              "frames": [s.frame.value for s in traj.states], "times": traj.times}
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for s in traj.states:
            buf = np.empty(s.values.shape + (2,), dtype="<f8")
            buf[..., 0] = s.values.real
            buf[..., 1] = np.imag(s.values)
            fh.write(buf.tobytes(order="C"))


def load_trajectory_dump(path) -> tuple[dict, np.ndarray]:
    """Header dict and complex array of shape (n_snapshots, *grid.shape)."""
    with open(path, "rb") as fh:
        if fh.readline() != DUMP_MAGIC:
            raise ValueError("not a trajectory dump")
        header = json.loads(fh.readline())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    shape = (len(header["times"]), *header["shape"], 2)
    raw = raw.reshape(shape)
    return header, raw[..., 0] + 1j * raw[..., 1]


DIAG_COLUMNS = ("t", "mass", "max_mod", "B0_norm", "B2_norm")


def write_diagnostics(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAG_COLUMNS)
        for row in zip(traj.times, traj.mass, traj.max_mod, traj.b0_norm, traj.b2_norm):
            w.writerow([repr(float(v)) for v in row])
