"""JSON run configuration: one document, fixed top-level sections, unknown keys rejected."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .data import InitialData
from .errors import ConfigError
from .harness import Estimate, PhysicalInputs, SweepSpec
from .kernel import DipoleAxis
from .nonlinearity import ModelParams
from .phase import QuadraticPhase
from .solvers import SolverConfig, Variant
from .spectral import Grid, make_grid

SECTIONS = {
    "grid": {"d", "x_half_width", "n_x", "z_half_width", "n_z", "K_z"},
    "params": {"sigma", "lambda0", "axis", "epsilon", "alpha", "gamma"},
    "phase": {"M", "b", "c"},
    "initial_data": {"kind", "width", "shift", "weights", "mode"},
    "solver": {"variant", "T_final", "dt", "record_stride", "n_theta", "mode"},
    "sweep": {"estimate", "ladder", "norms", "refinement", "beta"},
    "output": {"dir", "dump"},
    "physical": {"mass_kg", "omega_x_rad_s", "omega_z_rad_s", "a_s_m", "N_atoms", "C_dip_SI"},
}

GRID_DEFAULTS = {"x_half_width": 8.0, "n_x": 32, "z_half_width": 6.0, "n_z": 32}


def _check_keys(doc: dict, allowed: set, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _mode(v):
    if isinstance(v, (list, tuple)):
        return tuple(int(x) for x in v)
    return int(v)


def _weight_key(k: str):
    parts = [int(p) for p in str(k).split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    params: ModelParams
    phase: QuadraticPhase
    initial: InitialData
    solver: dict
    sweep: dict | None
    output: dict
    physical: PhysicalInputs | None

    def solver_config(self) -> SolverConfig:
        s = self.solver
        try:
            variant = Variant(s.get("variant", "full"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return SolverConfig(float(s.get("T_final", 0.5)), float(s.get("dt", 0.025)), self.grid,
                            self.params, variant, self.phase, int(s.get("record_stride", 0)),
                            _mode(s.get("mode", self.initial.mode)), s.get("n_theta"))

    def sweep_spec(self) -> SweepSpec:
        if self.sweep is None:
            raise ConfigError("config has no 'sweep' section")
        s, sv = self.sweep, self.solver
        try:
            return SweepSpec(Estimate(s["estimate"]), tuple(s["ladder"]), self.grid, self.params,
                             float(sv.get("T_final", 0.5)), float(sv.get("dt", 0.025)), self.phase,
                             self.initial, tuple(int(m) for m in s.get("norms", (0, 2))),
                             int(s.get("refinement", 1)), sv.get("n_theta"), s.get("beta"))
        except KeyError as exc:
            raise ConfigError(f"sweep section misses {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document and build typed objects."""
    _check_keys(doc, set(SECTIONS), "config")
    for name, keys in SECTIONS.items():
        if name in doc:
            _check_keys(doc[name], keys, name)
    try:
        gd = {**GRID_DEFAULTS, **doc.get("grid", {})}
        d = int(gd.get("d", 1))
        grid = make_grid(d, float(gd["x_half_width"]), int(gd["n_x"]), float(gd["z_half_width"]),
                         int(gd["n_z"]), gd.get("K_z"))
        pd = doc.get("params", {})
        axis = DipoleAxis.from_vector(pd.get("axis", [0.0, 0.0, 1.0]), d)
        params = ModelParams(d, int(pd.get("sigma", 1)), float(pd.get("lambda0", 0.0)), axis,
                             float(pd.get("epsilon", 0.5)), float(pd.get("alpha", 0.5)),
                             float(pd.get("gamma", 0.25)))
        ph = doc.get("phase")
        phase = (QuadraticPhase(ph.get("M", [[0.0] * grid.dim_x] * grid.dim_x),
                                ph.get("b", [0.0] * grid.dim_x), float(ph.get("c", 0.0)))
                 if ph else QuadraticPhase.zero(grid.dim_x))
        idd = dict(doc.get("initial_data", {}))
        if "weights" in idd:
            w = idd["weights"]
            if not isinstance(w, dict):
                raise ConfigError("initial_data.weights must map mode -> weight")
            idd["weights"] = {_weight_key(k): (complex(*v) if isinstance(v, list) else v)
                              for k, v in w.items()}
        if "mode" in idd:
            idd["mode"] = _mode(idd["mode"])
        initial = InitialData(**idd)
        phys = PhysicalInputs(**doc["physical"]) if "physical" in doc else None
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(grid, params, phase, initial, dict(doc.get("solver", {})), doc.get("sweep"),
                     dict(doc.get("output", {})), phys)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_config(doc)
