"""Command-line surface: classify, shoot, solve, verify, degree.

Exit codes: 0 on success, 1 when the solver comes back negative (no zero
found, or a truncated run under ``--strict``), 2 on invalid input.  All JSON
output is key-sorted and floats use shortest round-trip formatting, so
identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import decay_fit, pohozaev_residual
from .degree_solver import build_grid, compute_degree, find_zero
from .errors import (
    AllUnresolved,
    ConfigError,
    NotFound,
    PolyshootError,
)
from .integrator import IvpControls, trajectory_from_csv, trajectory_to_csv
from .system_spec import (
    check_nondegeneracy,
    classify_criticality,
    load_spec,
    reduce,
    validate,
)
from .target_map import CASE_BOUNDARY, CASE_UNRESOLVED, default_jobs, psi

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INVALID = 2


@dataclass
class RunConfig:
    """Everything one invocation needs, resolved from flags and environment."""

    spec_path: Path
    controls: IvpControls
    mass: Optional[float]
    output_dir: Path
    seed: int
    jobs: int
    emit_plot: bool


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _add_common(parser: argparse.ArgumentParser, need_spec: bool = True) -> None:
    if need_spec:
        parser.add_argument("--spec", required=True, help="system config file (JSON)")
    parser.add_argument("--output-dir", default=".", help="directory for file outputs")
    parser.add_argument("--seed", type=int, default=0, help="seed recorded in outputs")
    parser.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="parallel vertex labeling (default: POLYSHOOT_JOBS or 1)",
    )
    parser.add_argument("--emit-plot", action="store_true", help="write a gnuplot script")
    parser.add_argument("--h0", type=float, default=1e-6, help="start radius (default 1e-6)")
    parser.add_argument("--rel-tol", type=float, default=1e-10, help="default 1e-10")
    parser.add_argument("--abs-tol", type=float, default=1e-12, help="default 1e-12")
    parser.add_argument("--r-max", type=float, default=1e3, help="default 1e3")
    parser.add_argument("--eps-wall", type=float, default=1e-10, help="default 1e-10")
    parser.add_argument("--eps-decay", type=float, default=1e-6, help="default 1e-6")
    parser.add_argument("--max-steps", type=int, default=500_000, help="default 500000")


def _config_from_args(args) -> RunConfig:
    try:
        controls = IvpControls(
            h0=args.h0,
            rel_tol=args.rel_tol,
            abs_tol=args.abs_tol,
            r_max=args.r_max,
            eps_wall=args.eps_wall,
            eps_decay=args.eps_decay,
            max_steps=args.max_steps,
        )
    except ValueError as exc:
        raise ConfigError(f"bad controls: {exc}") from exc
    mass = getattr(args, "mass", None)
    if mass is not None and mass <= 0.0:
        raise ConfigError(f"--mass must be positive, got {mass}")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    return RunConfig(
        spec_path=Path(getattr(args, "spec", ".")),
        controls=controls,
        mass=mass,
        output_dir=out_dir,
        seed=args.seed,
        jobs=max(1, jobs),
        emit_plot=args.emit_plot,
    )


def _load_system(path):
    spec = load_spec(path)
    report = validate(spec)
    if not report.ok:
        raise ConfigError("invalid system: " + "; ".join(report.messages()))
    return spec, reduce(spec)


def _emit_plot(cfg: RunConfig, csv_name: str, n_components: int) -> Path:
    """Gnuplot script referencing the CSV; no plotting dependency needed."""
    lines = [
        'set datafile separator ","',
        "set logscale x",
        'set xlabel "r"',
        'set ylabel "w"',
        "plot "
        + ", ".join(
            f'"{csv_name}" using 1:{i + 2} with lines title "w_{i + 1}"'
            for i in range(n_components)
        ),
    ]
    path = cfg.output_dir / "plot.gp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_classify(args) -> int:
    cfg = _config_from_args(args)
    spec, _ = _load_system(cfg.spec_path)
    crit = classify_criticality(spec)
    nondeg = check_nondegeneracy(spec)
    out = crit.to_json()
    out["nondegeneracy"] = nondeg.to_json()
    out["seed"] = cfg.seed
    print(_dump(out))
    return EXIT_OK


def cmd_shoot(args) -> int:
    cfg = _config_from_args(args)
    _, rs = _load_system(cfg.spec_path)
    try:
        alpha = np.array([float(x) for x in args.alpha.split(",")])
    except ValueError as exc:
        raise ConfigError(f"--alpha must be comma-separated numbers: {exc}") from exc
    if alpha.size != rs.total_len:
        raise ConfigError(
            f"--alpha needs {rs.total_len} entries (chain length), got {alpha.size}"
        )
    if np.any(alpha < 0.0):
        raise ConfigError("--alpha entries must be >= 0")

    result = psi(rs, alpha, cfg.controls, keep_trajectory=True)
    record = result.to_json()
    record["seed"] = cfg.seed
    if result.case != CASE_BOUNDARY:
        csv_path = cfg.output_dir / "trajectory.csv"
        trajectory_to_csv(result.trajectory, csv_path)
        record["trajectory_csv"] = str(csv_path)
        if cfg.emit_plot:
            record["plot"] = str(_emit_plot(cfg, csv_path.name, rs.total_len))
    print(_dump(record))
    if args.strict and result.case == CASE_UNRESOLVED:
        print("strict mode: run truncated before resolving", file=sys.stderr)
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    _, rs = _load_system(cfg.spec_path)
    if cfg.mass is None:
        raise ConfigError("--mass is required for solve")
    alpha_star, result, report = find_zero(
        rs,
        cfg.mass,
        cfg.controls,
        budget=args.budget,
        depth=args.depth,
        jobs=cfg.jobs,
    )
    # profile of the certified candidate, re-shot with extended range
    wide = cfg.controls.replace(r_max=cfg.controls.r_max * 1e4)
    profile = psi(rs, alpha_star, wide, keep_trajectory=True)
    csv_path = cfg.output_dir / "profile.csv"
    trajectory_to_csv(profile.trajectory, csv_path)
    trace_path = cfg.output_dir / "degree_trace.json"
    trace_path.write_text(_dump(report.to_json()) + "\n", encoding="utf-8")

    out = {
        "alpha_star": [float(x) for x in alpha_star],
        "psi": result.to_json(),
        "mass": cfg.mass,
        "seed": cfg.seed,
        "degree": report.degree,
        "profile_csv": str(csv_path),
        "degree_trace": str(trace_path),
    }
    if cfg.emit_plot:
        out["plot"] = str(_emit_plot(cfg, csv_path.name, rs.total_len))
    solution_path = cfg.output_dir / "solution.json"
    solution_path.write_text(_dump(out) + "\n", encoding="utf-8")
    print(_dump(out))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    _, rs = _load_system(cfg.spec_path)
    try:
        traj = trajectory_from_csv(args.pohozaev)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read trajectory {args.pohozaev}: {exc}") from exc
    report = pohozaev_residual(traj, rs)
    out = report.to_json()
    out["seed"] = cfg.seed
    if args.fit_decay:
        try:
            out["decay_fit"] = decay_fit(traj).to_json()
        except PolyshootError as exc:
            out["decay_fit"] = {"error": str(exc)}
    print(_dump(out))
    return EXIT_OK


def cmd_degree(args) -> int:
    cfg = _config_from_args(args)
    _, rs = _load_system(cfg.spec_path)
    if cfg.mass is None:
        raise ConfigError("--mass is required for degree")
    grid = build_grid(rs, cfg.mass, args.depth, cfg.controls, jobs=cfg.jobs)
    report = compute_degree(grid)
    out = report.to_json()
    out["mass"] = cfg.mass
    out["seed"] = cfg.seed
    print(_dump(out))
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyshoot",
        description="Shooting with degree-guided aiming for weighted polyharmonic systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="criticality and non-degeneracy reports")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("shoot", help="integrate one shooting vector")
    _add_common(p)
    p.add_argument("--alpha", required=True, help="comma-separated chain start values")
    p.add_argument(
        "--strict", action="store_true", help="exit 1 when the run truncates unresolved"
    )
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("solve", help="find a decaying solution on the mass simplex")
    _add_common(p)
    p.add_argument("--mass", type=float, required=True, help="simplex mass a > 0")
    p.add_argument("--budget", type=int, default=80, help="search iterations (default 80)")
    p.add_argument("--depth", type=int, default=3, help="degree grid depth (default 3)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check integral identities on a trajectory")
    _add_common(p)
    p.add_argument("--pohozaev", required=True, help="trajectory CSV to verify")
    p.add_argument("--fit-decay", action="store_true", help="append a tail decay fit")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("degree", help="label a simplex grid and compute the degree")
    _add_common(p)
    p.add_argument("--mass", type=float, required=True, help="simplex mass a > 0")
    p.add_argument("--depth", type=int, default=3, help="grid depth (default 3)")
    p.set_defaults(func=cmd_degree)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, matching the invalid-input contract
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NotFound, AllUnresolved) as exc:
        print(f"no solution certified: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except PolyshootError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
