"""Physical scaling, parameter sweeps, log-log rate fits and the self-test suite."""
from __future__ import annotations

import concurrent.futures as cf
import csv
import enum
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .data import InitialData
from .errors import RegimeWarning, SolverFailure
from .kernel import DipoleAxis, convolve, kernel_table, vdip_hat, w_split_hat
from .nonlinearity import ModelParams, ThetaQuadrature, average_F, eval_F, eval_F_av
from .phase import (FrameStamp, QuadraticPhase, caustic_time, evolve_phase, from_filtered,
                    riccati_rk4)
from .solvers import SolverConfig, Variant, filtered_state, solve
from .spectral import (Grid, WaveField, discrete_B_norm, embed, hermite_basis, l2_norm,
                       make_grid, transform)


# --- physical inputs ----------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalInputs:
    """SI description of a trapped dipolar gas; ``a_s_m`` carries the sign of the contact term."""

    mass_kg: float
    omega_x_rad_s: float
    omega_z_rad_s: float
    a_s_m: float
    N_atoms: float
    C_dip_SI: float

    def __post_init__(self):
        for name in ("mass_kg", "omega_x_rad_s", "omega_z_rad_s", "N_atoms", "C_dip_SI"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a_s_m == 0:
            raise ValueError("a_s_m must be nonzero")
        if self.omega_x_rad_s > self.omega_z_rad_s:
            raise ValueError("need omega_z >= omega_x (strong confinement along z)")


@dataclass(frozen=True)
class ScaledInputs:
    epsilon: float
    beta: float
    lambda0: float
    a0_m: float
    sigma: int


def nondimensionalize(phys: PhysicalInputs) -> ScaledInputs:
    """eps = sqrt(w_x/w_z), a0 = sqrt(hbar/(m w_x)), beta = 4 pi N |a_s| / a0, lambda0 = C_dip/(3|g|)."""
    hbar = constants.hbar
    eps = math.sqrt(phys.omega_x_rad_s / phys.omega_z_rad_s)
    a0 = math.sqrt(hbar / (phys.mass_kg * phys.omega_x_rad_s))
    beta = 4.0 * math.pi * phys.N_atoms * abs(phys.a_s_m) / a0
    g = 4.0 * math.pi * hbar**2 * phys.a_s_m / phys.mass_kg
    lam = phys.C_dip_SI / (3.0 * abs(g))
    return ScaledInputs(eps, beta, lam, a0, int(math.copysign(1, phys.a_s_m)))


def derive_scaled_params(epsilon: float, beta: float, d: int) -> tuple[float, float]:
    """alpha = eps^{2d/n} beta^{-2/n} with n = 3 - d, and the physical coupling gamma = eps sqrt(alpha)."""
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if d not in (1, 2):
        raise ValueError("d must be 1 or 2")
    n = 3 - d
    alpha = epsilon ** (2 * d / n) * beta ** (-2 / n)
    if alpha > 1:
        warnings.warn(f"alpha={alpha:.4g} > 1: semiclassical scaling does not apply", RegimeWarning,
                      stacklevel=2)
    return alpha, epsilon * math.sqrt(alpha)


# --- rate fitting -------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    points: tuple
    slope: float
    intercept: float
    r_squared: float


def fit_rate(points) -> RateFit:
    """Least-squares line through (log p, log e)."""
    pts = tuple((float(p), float(e)) for p, e in points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    p = np.array([q[0] for q in pts])
    e = np.array([q[1] for q in pts])
    if np.any(p <= 0) or np.any(e <= 0):
        raise ValueError("parameters and errors must be positive")
    X, Y = np.log(p), np.log(e)
    A = np.stack([X, np.ones_like(X)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return RateFit(pts, float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)))


# --- sweeps -------------------------------------------------------------------------

class Estimate(enum.Enum):
    EPS_RATE = "EpsRate"
    ALPHA_RATE = "AlphaRate"
    GAMMA_RATE = "GammaRate"
    GAMMA_RATE_POLARIZED = "GammaRatePolarized"
    GLOBAL_RATE = "GlobalRate"
    COUPLED_PHYSICAL = "CoupledPhysical"


@dataclass(frozen=True)
class SweepSpec:
    """A convergence study. ``params`` holds the values that stay fixed along the ladder.

    Fast variants step with min(dt, eps^2/10). The reference run uses its own
    step divided by 2**refinement.
    """

    estimate: Estimate
    ladder: tuple
    grid: Grid
    params: ModelParams
    T_final: float = 0.5
    dt: float = 0.025
    phase: QuadraticPhase | None = None
    initial: InitialData = field(default_factory=InitialData)
    norms: tuple = (0, 2)
    refinement: int = 1
    n_theta: int | None = None
    beta: float | None = None

    def __post_init__(self):
        lad = tuple(float(v) for v in self.ladder)
        object.__setattr__(self, "ladder", lad)
        if len(lad) < 3:
            raise ValueError("ladder needs at least 3 values")
        if any(not 0 < v <= 1 for v in lad):
            raise ValueError("ladder values must lie in (0, 1]")
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("ladder must be strictly decreasing")
        if self.estimate is Estimate.COUPLED_PHYSICAL and not (self.beta and self.beta > 0):
            raise ValueError("CoupledPhysical needs beta > 0")
        if self.refinement < 0:
            raise ValueError("refinement must be nonnegative")


@dataclass(frozen=True)
class RunTask:
    cfg: SolverConfig
    initial: InitialData
    label: str


def _fast_dt(dt: float, eps: float) -> float:
    return min(dt, eps**2 / 10)


def _task(spec: SweepSpec, variant: Variant, params: ModelParams, dt: float, label: str) -> RunTask:
    cfg = SolverConfig(spec.T_final, dt, spec.grid, params, variant, spec.phase,
                       mode=spec.initial.mode, n_theta=spec.n_theta)
    return RunTask(cfg, spec.initial, label)


def plan_sweep(spec: SweepSpec) -> tuple[RunTask, list[RunTask]]:
    """Reference run and one model run per ladder value."""
    P, est, ref = spec.params, spec.estimate, 2.0**-spec.refinement
    TO, TL = Variant.TRANSPORT_OSCILLATORY, Variant.TRANSPORT_LIMIT
    models = []
    if est is Estimate.EPS_RATE:
        reference = _task(spec, Variant.AVERAGED, P, spec.dt * ref, "reference")
        for e in spec.ladder:
            models.append(_task(spec, Variant.FULL, P.with_(epsilon=e), _fast_dt(spec.dt, e), f"epsilon={e!r}"))
    elif est is Estimate.ALPHA_RATE:
        step = _fast_dt(spec.dt, P.epsilon)
        reference = _task(spec, TO, P.with_(alpha=0.0), step * ref, "reference")
        for a in spec.ladder:
            models.append(_task(spec, TO, P.with_(alpha=a), step, f"alpha={a!r}"))
    elif est is Estimate.GAMMA_RATE:
        step = _fast_dt(spec.dt, P.epsilon)
        reference = _task(spec, TO, P.with_(gamma=0.0), step * ref, "reference")
        for g in spec.ladder:
            models.append(_task(spec, TO, P.with_(gamma=g), step, f"gamma={g!r}"))
    elif est is Estimate.GAMMA_RATE_POLARIZED:
        reference = _task(spec, Variant.POLARIZED, P.with_(gamma=0.0), spec.dt * ref, "reference")
        for g in spec.ladder:
            models.append(_task(spec, Variant.POLARIZED, P.with_(gamma=g), spec.dt, f"gamma={g!r}"))
    else:
        reference = _task(spec, TL, P.with_(alpha=0.0, gamma=0.0), spec.dt * ref, "reference")
        for v in spec.ladder:
            if est is Estimate.GLOBAL_RATE:
                eps, alpha = v, v
                gamma = eps * math.sqrt(alpha)
            else:
                eps = v
                alpha, gamma = derive_scaled_params(eps, spec.beta, spec.grid.d)
            models.append(_task(spec, TO, P.with_(epsilon=eps, alpha=alpha, gamma=gamma),
                                _fast_dt(spec.dt, eps), f"param={v!r}"))
    return reference, models


def execute(task: RunTask) -> np.ndarray:
    """Run one task and return its terminal filtered-frame state."""
    cfg = task.cfg
    grid, params = cfg.grid, cfg.params
    try:
        A0 = task.initial.amplitude(grid, params.alpha if params.alpha > 0 else 1.0)
        if cfg.variant in (Variant.FULL, Variant.AVERAGED):
            eps = params.epsilon if cfg.variant is Variant.FULL else 0.0
            initial = from_filtered(A0, FrameStamp(0.0, eps, params.alpha, cfg.initial_phase))
        else:
            initial = A0
        traj = solve(initial, cfg)
        return filtered_state(traj, cfg).values
    except Exception as exc:  # annotate and re-raise for the sweep
        raise SolverFailure(f"{task.label}: {type(exc).__name__}: {exc}") from exc


@dataclass
class SweepResult:
    spec: SweepSpec
    params: list
    errors: dict            # norm -> list of errors, ladder order
    fits: dict              # norm -> RateFit
    reference_dt: float

    def rates_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimate", "norm", "param", "error", "slope", "r2"])
        for m in self.spec.norms:
            fit = self.fits[m]
            for p, e in zip(self.params, self.errors[m]):
                w.writerow([self.spec.estimate.value, f"B{m}", repr(p), repr(e),
                            repr(fit.slope), repr(fit.r_squared)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "estimate": self.spec.estimate.value,
            "T_final": self.spec.T_final,
            "grid": self.spec.grid.describe(),
            "reference_refinement": self.spec.refinement,
            "reference_dt": self.reference_dt,
            "fits": [{"norm": f"B{m}", "slope": f.slope, "intercept": f.intercept,
                      "r2": f.r_squared, "points": [list(p) for p in f.points]}
                     for m, f in sorted(self.fits.items())],
        }

    def write(self, out_dir) -> None:
        import pathlib
        out = pathlib.Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rates.csv").write_text(self.rates_csv())
        (out / "fits.json").write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Run the reference and all ladder points (concurrently when jobs > 1), then fit rates."""
    reference, models = plan_sweep(spec)
    tasks = [reference] + models
    if jobs > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            finals = list(pool.map(execute, tasks))
    else:
        finals = [execute(t) for t in tasks]
    ref = finals[0]
    grid = spec.grid
    errors = {m: [] for m in spec.norms}
    for vals in finals[1:]:
        diff = WaveField(grid, vals - ref)
        for m in spec.norms:
            errors[m].append(discrete_B_norm(diff, m))
    fits = {m: fit_rate(zip(spec.ladder, errors[m])) for m in spec.norms}
    return SweepResult(spec, list(spec.ladder), errors, fits, reference.cfg.step)


# --- self-test ----------------------------------------------------------------------

@dataclass
class SelfTestReport:
    entries: list = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str):
        self.entries.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(e[1] for e in self.entries)

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in self.entries]


def brute_force_convolution(rho: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """sum_k V(k) rho_hat(k) e^{ikx} with explicit DFT matrices, O(N^2)."""
    shape = rho.shape
    idx = np.stack(np.meshgrid(*[np.arange(n) for n in shape], indexing="ij"), -1).reshape(-1, 3)
    freq = np.stack(np.meshgrid(*[np.fft.fftfreq(n) * n for n in shape], indexing="ij"), -1).reshape(-1, 3)
    phase = 2j * np.pi * sum(np.outer(idx[:, a], freq[:, a]) / shape[a] for a in range(3))
    E = np.exp(phase)                          # E[x, k] = e^{i k x}
    rho_hat = E.conj().T @ rho.ravel()
    out = E @ (multiplier.ravel() * rho_hat) / rho.size
    return out.real.reshape(shape)


def _random_field(grid: Grid, rng, smooth: bool = True) -> np.ndarray:
    """Random resolved field: random Hermite coefficients on random x-Gaussians."""
    basis = hermite_basis(grid)
    x = np.meshgrid(*([grid.x] * grid.dim_x), indexing="ij")
    env = np.exp(-sum(c**2 for c in x) / 2)
    shape = grid.x_shape + ((grid.K_z,) * grid.d)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kk = np.arange(grid.K_z)
    decay = np.exp(-0.5 * kk) if grid.d == 1 else np.exp(-0.5 * (kk[:, None] + kk[None, :]))
    c = c * decay * env[(...,) + (None,) * grid.d]
    v = basis.synthesize(c)
    return v / l2_norm(v, grid)


def selftest(seed: int = 0, inject: dict | None = None) -> SelfTestReport:
    """Run the invariant checks of every module on small grids.

    ``inject`` supports fault fixtures: ``{"kernel_sign": True}`` flips the sign of
    the dipolar multiplier; ``{"n_theta": n}`` replaces the fast-angle quadrature.
    """
    inject = inject or {}
    rng = np.random.default_rng(seed)
    rep = SelfTestReport()
    g1 = make_grid(1, 6.0, 16, 6.0, 16)
    axis = DipoleAxis.from_vector([np.sin(0.3), 0.0, np.cos(0.3)], 1)

    # kernel bounds
    lo, hi = np.inf, -np.inf
    for gam in (0.0, 0.1, 0.5, 1.0):
        m = kernel_table(g1, axis, gam).multiplier
        if inject.get("kernel_sign"):
            m = -m
        lo, hi = min(lo, m.min()), max(hi, m.max())
    rep.add("kernel_bounds", lo >= -1 / 3 - 1e-12 and hi <= 2 / 3 + 1e-12, f"range [{lo:.6f}, {hi:.6f}]")

    # W1 + W2 split identity
    kx = rng.standard_normal((200, 2))
    kz = rng.standard_normal((200, 1)) + 0.1
    gam = rng.uniform(0, 1)
    w1, w2 = w_split_hat(kx, kz, gam, axis)
    gap = np.max(np.abs(w1 + w2 - (vdip_hat(kx, kz, gam, axis) - vdip_hat(kx, kz, 0.0, axis))))
    rep.add("w_split_identity", gap < 1e-12, f"max gap {gap:.2e}")

    # brute-force convolution on 8^3
    g8 = make_grid(1, 4.0, 8, 4.0, 8)
    t8 = kernel_table(g8, axis, 0.5)
    rho = rng.standard_normal(g8.shape)
    gap = np.max(np.abs(convolve(rho, t8) - brute_force_convolution(rho, t8.multiplier)))
    rep.add("convolution_bruteforce", gap < 1e-8, f"max gap {gap:.2e}")

    # unitarity and periodicity
    u = _random_field(g1, rng)
    f = WaveField(g1, u)
    n_fft = transform(f, "forward").norm()
    basis = hermite_basis(g1)
    n_hz = l2_norm(basis.apply(u, 0.731), g1)
    rep.add("unitarity", abs(n_fft - 1) < 1e-12 and abs(n_hz - 1) < 1e-10,
            f"fft {abs(n_fft - 1):.1e}, H_z {abs(n_hz - 1):.1e}")
    gap = np.max(np.abs(basis.apply(u, 2 * np.pi) - u))
    rep.add("hz_periodicity", gap < 1e-10, f"max gap {gap:.2e}")

    # gauge invariance
    params = ModelParams(1, 1, 0.5, axis, 0.5, 0.5, 0.25)
    x = g1.coords
    gauge = np.exp(1j * np.sin(x[0] + 0.5 * x[1]))
    Fu = eval_F(0.9, f, params).values
    Fg = eval_F(0.9, f.replace(gauge * u), params).values
    Au = eval_F_av(f, params).values
    Ag = eval_F_av(f.replace(gauge * u), params).values
    gap = max(np.max(np.abs(Fg - gauge * Fu)), np.max(np.abs(Ag - gauge * Au)))
    rep.add("gauge_invariance", gap < 1e-10, f"max gap {gap:.2e}")

    # polarization
    a = np.exp(-sum(c**2 for c in np.meshgrid(g1.x, g1.x, indexing="ij")) / 2)
    P = WaveField(g1, embed(a, g1, 1))
    out = eval_F_av(P, params).values
    c = basis.analyze(out)
    off = np.sqrt(np.sum(np.abs(np.delete(c, 1, axis=-1)) ** 2))
    rel = off / max(np.sqrt(np.sum(np.abs(c) ** 2)), 1e-300)
    rep.add("polarization", rel < 1e-9, f"off-mode fraction {rel:.2e}")

    # quadrature exactness under doubling
    n_theta = inject.get("n_theta", 4 * g1.K_z + 2)
    q = ThetaQuadrature(n_theta)
    q2 = ThetaQuadrature(2 * n_theta)
    gap = np.max(np.abs(average_F(u, g1, params, q) - average_F(u, g1, params, q2)))
    rep.add("quadrature_doubling", gap < 1e-11, f"N_theta={n_theta}, max gap {gap:.2e}")

    # Riccati closed form vs RK4, caustic time
    worst = 0.0
    for _ in range(3):
        A = rng.standard_normal((2, 2))
        S0 = QuadraticPhase(0.5 * (A + A.T), rng.standard_normal(2), rng.standard_normal())
        t = 0.6 * S0.t_caustic
        M, b, cc = riccati_rk4(S0, t, 1000)
        St = evolve_phase(S0, t)
        worst = max(worst, np.max(np.abs(M - St.M)), np.max(np.abs(b - St.b)), abs(cc - St.c))
    tc = caustic_time(np.zeros((2, 2)))
    rep.add("riccati_oracle", worst < 1e-9 and abs(tc - np.pi / 2) < 1e-10,
            f"max gap {worst:.2e}, caustic {tc:.12f}")
    return rep
