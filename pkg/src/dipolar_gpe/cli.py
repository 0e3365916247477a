"""Command-line entry point: solve, sweep, rates, params, selftest."""
from __future__ import annotations

import argparse
import csv
import json
import os
import pathlib
import sys

from .config import load_config
from .errors import ConfigError
from .harness import (derive_scaled_params, fit_rate, nondimensionalize, run_sweep, selftest)
from .phase import FrameStamp, from_filtered
from .solvers import Variant, dump_trajectory, solve, write_diagnostics

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SELFTEST = 0, 1, 2, 3

EPILOG = """\
outputs:
  solve   trajectory.bin   magic line, JSON header line, little-endian float64 re/im pairs
          diagnostics.csv  columns t,mass,max_mod,B0_norm,B2_norm
  sweep   rates.csv        columns estimate,norm,param,error,slope,r2
          fits.json        slope, intercept, r2 per norm with T_final, grid and reference level
  rates   rates.csv        refit of an existing CSV with columns param,error
                           (grouped by estimate,norm when present)
exit codes: 0 success, 1 config error, 2 solver failure, 3 selftest failure
"""


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dipolar-gpe", description=__doc__, epilog=EPILOG,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("solve", "run one solver configuration"),
                       ("sweep", "run a convergence sweep and fit rates"),
                       ("params", "scaled parameters from physical inputs"),
                       ("selftest", "run the invariant self-test suite")]:
        _common(sub.add_parser(name, help=text, epilog=EPILOG,
                               formatter_class=argparse.RawDescriptionHelpFormatter))
    rates = sub.add_parser("rates", help="fit log-log rates on an existing CSV", epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    _common(rates)
    rates.add_argument("csv", help="CSV with columns param,error")
    st = sub.choices["selftest"]
    st.add_argument("--inject-kernel-sign", action="store_true", help=argparse.SUPPRESS)
    st.add_argument("--inject-n-theta", type=int, help=argparse.SUPPRESS)
    return parser


def _need_config(args):
    if not args.config:
        raise ConfigError("--config is required")
    return load_config(args.config)


def cmd_solve(args) -> int:
    rc = _need_config(args)
    cfg = rc.solver_config()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        p = cfg.params
        A0 = rc.initial.amplitude(cfg.grid, p.alpha if p.alpha > 0 else 1.0)
        if cfg.variant in (Variant.FULL, Variant.AVERAGED):
            eps = p.epsilon if cfg.variant is Variant.FULL else 0.0
            A0 = from_filtered(A0, FrameStamp(0.0, eps, p.alpha, cfg.initial_phase))
        traj = solve(A0, cfg)
    except ConfigError:
        raise
    except Exception as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    dump_trajectory(traj, out / "trajectory.bin")
    write_diagnostics(traj, out / "diagnostics.csv")
    print(f"{len(traj.times)} snapshots, mass drift {traj.mass_drift():.3e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    rc = _need_config(args)
    spec = rc.sweep_spec()
    try:
        result = run_sweep(spec, jobs=max(1, args.jobs))
    except Exception as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    result.write(args.out)
    for m, fit in sorted(result.fits.items()):
        print(f"{spec.estimate.value} B{m}: slope {fit.slope:.4f}, r2 {fit.r_squared:.4f}")
    return EXIT_OK


def cmd_rates(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {args.csv}: {exc}") from exc
    if not rows or not {"param", "error"} <= set(rows[0]):
        raise ConfigError("CSV needs columns param,error")
    groups: dict = {}
    for r in rows:
        key = (r.get("estimate", ""), r.get("norm", ""))
        groups.setdefault(key, []).append((float(r["param"]), float(r["error"])))
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["estimate,norm,param,error,slope,r2"]
    try:
        for (est, norm), pts in groups.items():
            fit = fit_rate(pts)
            lines += [f"{est},{norm},{p!r},{e!r},{fit.slope!r},{fit.r_squared!r}" for p, e in pts]
            print(f"{est or '-'} {norm or '-'}: slope {fit.slope:.4f}, r2 {fit.r_squared:.4f}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    (out / "rates.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_params(args) -> int:
    rc = _need_config(args)
    if rc.physical is None:
        raise ConfigError("config has no 'physical' section")
    s = nondimensionalize(rc.physical)
    alpha, gamma = derive_scaled_params(s.epsilon, s.beta, rc.grid.d)
    doc = {"epsilon": s.epsilon, "beta": s.beta, "lambda0": s.lambda0, "a0_m": s.a0_m,
           "sigma": s.sigma, "d": rc.grid.d, "alpha": alpha, "gamma": gamma}
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args) -> int:
    inject = {}
    if args.inject_kernel_sign:
        inject["kernel_sign"] = True
    if args.inject_n_theta:
        inject["n_theta"] = args.inject_n_theta
    report = selftest(seed=args.seed, inject=inject)
    print("\n".join(report.lines()))
    return EXIT_OK if report.ok else EXIT_SELFTEST


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "rates": cmd_rates, "params": cmd_params,
            "selftest": cmd_selftest}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as configuration errors
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
