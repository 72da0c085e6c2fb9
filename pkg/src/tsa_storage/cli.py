"""Command-line entry point: aggregate, solve, sweep, validate.

Exit codes: 0 success, 2 input or validation error, 3 infeasible or
unbounded model, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .aggregation import aggregate, representation_error, to_json
from .analysis import (ComparisonReport, cost_breakdown, export_soc_heatmap, parse_kind,
                       run_formulation, run_sweep)
from .cases import bundled_synthetic
from .energy_system import BUNDLED_CASES, SystemConfigError, load_case, load_system, validate_system
from .formulations import (FULL, KINDS, FormulationError, build_model, collector_imbalance,
                           decode_storage_trajectory, design_values, simultaneous_operation)
from .milp import Status, write_mps
from .timeseries import ProfileError, ingest_profiles

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _days_list(text):
    try:
        vals = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("every number of typical days must be >= 1")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsa-storage", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver=True):
        sp.add_argument("--system", help=f"system JSON path or bundled case {BUNDLED_CASES}")
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--profiles", help="CSV with one column per referenced profile")
        src.add_argument("--synthetic", help="recipe case[:seed=,days=,steps=], e.g. island:days=48")
        sp.add_argument("--steps", type=_positive, default=None, help="steps per period (default 24)")
        sp.add_argument("--step-hours", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=None, help="seed for synthetic profiles")
        sp.add_argument("--mode", choices=("pam", "exact"), default="pam")
        sp.add_argument("--out", default="runs", help="parent directory of run outputs")
        if solver:
            sp.add_argument("--solver", default="embedded",
                            help="embedded | highs | cmd:<template with {mps} and {sol}>")
            sp.add_argument("--time-limit", type=float, default=None)

    sp = sub.add_parser("aggregate", help="select typical periods")
    common(sp, solver=False)
    sp.add_argument("--days", type=_positive, required=True)

    sp = sub.add_parser("solve", help="build and solve one formulation")
    common(sp)
    sp.add_argument("--days", type=_positive)
    sp.add_argument("--kind", choices=KINDS, default="linked")
    sp.add_argument("--simplified-bounds", action="store_true")
    sp.add_argument("--export-mps", action="store_true", help="write the model and stop")
    sp.add_argument("--heatmap", action="store_true", help="export storage state heatmaps")

    sp = sub.add_parser("sweep", help="compare formulations over numbers of typical days")
    common(sp)
    sp.add_argument("--days", type=_days_list, required=True, help="comma list, e.g. 6,12")
    sp.add_argument("--kind", action="append", dest="kinds",
                    help="independent | linked | linked+simplified (repeatable)")
    sp.add_argument("--simplified-bounds", action="store_true",
                    help="add linked+simplified rows")
    sp.add_argument("--jobs", type=_positive, default=1)
    sp.add_argument("--resume", help="previous report.json; solved rows are kept")

    sp = sub.add_parser("validate", help="check a system configuration (and profiles)")
    common(sp, solver=False)
    return p


def _load_inputs(args):
    """Resolve system, profiles and steps per period from the arguments."""
    steps = args.steps
    if args.synthetic:
        try:
            spec, profiles, recipe_steps = bundled_synthetic(args.synthetic, args.seed)
        except (KeyError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        steps = steps or recipe_steps
        if args.system:
            spec = _load_system(args.system)
        return spec, profiles, steps
    if not args.system:
        raise UsageError("--system is required unless a --synthetic recipe names the case")
    spec = _load_system(args.system)
    if args.profiles is None:
        return spec, None, steps or 24
    if not Path(args.profiles).exists():
        raise UsageError(f"profiles file not found: {args.profiles}")
    profiles = ingest_profiles(args.profiles, sorted(spec.profile_refs()), args.step_hours)
    return spec, profiles, steps or 24


def _load_system(ref):
    if ref in BUNDLED_CASES:
        return load_case(ref)
    if not Path(ref).exists():
        raise UsageError(f"system file not found: {ref}")
    return load_system(ref)


def _run_dir(args) -> Path:
    parent = Path(args.out)
    stamp = time.strftime("%Y%m%d-%H%M%S")
    base = parent / f"{args.command}-{stamp}"
    path, n = base, 1
    while path.exists():
        n += 1
        path = Path(f"{base}-{n}")
    path.mkdir(parents=True)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    (path / "config.json").write_text(json.dumps(config, indent=1, sort_keys=True))
    return path


def _dump(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=1))
    return path


def cmd_validate(args) -> int:
    spec, profiles, _ = _load_inputs(args)
    names = None if profiles is None else profiles.names
    defects = validate_system(spec, names)
    for d in defects:
        print(f"defect: {d}")
    if defects:
        return EXIT_INPUT
    print(f"{spec.name}: {len(spec.devices)} devices, {len(spec.connections)} connections, ok")
    return EXIT_OK


def _need_profiles(profiles):
    if profiles is None:
        raise UsageError("this command needs --profiles or --synthetic")


def cmd_aggregate(args) -> int:
    spec, profiles, steps = _load_inputs(args)
    _need_profiles(profiles)
    n_periods = profiles.aligned_length // steps
    if args.days > n_periods:
        raise UsageError(f"--days must lie in [1, {n_periods}]")
    typ, candidates = aggregate(profiles, steps, args.days, args.mode)
    out = _run_dir(args)
    doc = to_json(typ, profiles, steps)
    _dump(out / "typical_periods.json", doc)
    summary = {"n_typical_periods": typ.n_typical, "n_candidate_periods": typ.n_candidates,
               "representation_error": representation_error(candidates, typ),
               "cardinalities": doc["cardinalities"]}
    _dump(out / "summary.json", summary)
    print(json.dumps(summary))
    print(f"written to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    spec, profiles, steps = _load_inputs(args)
    _need_profiles(profiles)
    kind = args.kind
    if args.simplified_bounds and kind != "linked":
        raise UsageError("--simplified-bounds requires --kind linked")
    if kind != FULL and args.days is None:
        raise UsageError(f"--days is required for the {kind} formulation")
    n_periods = profiles.aligned_length // steps
    if kind != FULL and args.days > n_periods:
        raise UsageError(f"--days must lie in [1, {n_periods}]")
    out = _run_dir(args)
    if args.export_mps:
        typ = None if kind == FULL else aggregate(profiles, steps, args.days, args.mode)[0]
        art = build_model(spec, profiles, kind, typ, steps, args.simplified_bounds)
        write_mps(art.model, out / "model.mps")
        print(f"model written to {out / 'model.mps'}")
        return EXIT_OK
    res = run_formulation(spec, profiles, kind, args.days, steps, args.simplified_bounds,
                          args.mode, args.solver, args.time_limit)
    sol = res.solution
    doc = {"system": spec.name, "kind": str(res.kind), "n_typical_days": res.n_typical_days,
           "status": sol.status.value, "message": sol.message,
           "solve_seconds": res.solve_seconds, "iterations": sol.iterations, "nodes": sol.nodes}
    if not sol.is_optimal:
        _dump(out / "result.json", doc)
        print(json.dumps({"status": sol.status.value, "message": sol.message}))
        if sol.status in (Status.INFEASIBLE, Status.UNBOUNDED):
            return EXIT_INFEASIBLE
        return EXIT_SOLVER
    trajectories = decode_storage_trajectory(res.art, sol, res.typ, steps)
    doc.update(objective=sol.objective, design=design_values(res.art, sol),
               costs=cost_breakdown(res.art, sol).to_dict(),
               audit={"simultaneous_charge_discharge": simultaneous_operation(res.art, sol),
                      "collector_imbalance": collector_imbalance(res.art, sol),
                      "constraint_violation": res.art.model.max_violation(sol.x),
                      "soc_euler_residual": {n: t.euler_residual() for n, t in trajectories.items()},
                      "soc_bound_violation": {n: t.bound_violation() for n, t in trajectories.items()}})
    _dump(out / "result.json", doc)
    if args.heatmap:
        for name, traj in trajectories.items():
            export_soc_heatmap(traj, out / f"soc_{name}.csv")
    print(json.dumps({"status": sol.status.value, "objective": sol.objective}))
    print(f"written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec, profiles, steps = _load_inputs(args)
    _need_profiles(profiles)
    kinds = args.kinds or ["independent", "linked"]
    if args.simplified_bounds:
        kinds = kinds + ["linked+simplified"]
    for k in kinds:
        try:
            kind, _ = parse_kind(k)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if kind == FULL:
            raise UsageError("the full reference row is always included; drop --kind full")
    resume = ComparisonReport.read_json(args.resume) if args.resume else None
    report = run_sweep(spec, profiles, args.days, kinds, args.solver, steps, args.mode,
                       args.jobs, resume, args.time_limit)
    out = _run_dir(args)
    report.write_json(out / "report.json")
    report.write_csv(out / "report.csv")
    for r in report.rows:
        err = "" if r.cost_share_error is None else f"{r.cost_share_error:.6f}"
        obj = "" if r.objective is None else f"{r.objective:.6g}"
        print(f"{r.kind:20s} {r.n_typical_days:5d} {r.status:12s} {obj:>14s} {err:>10s}")
    print(f"written to {out}")
    failed = [r for r in report.rows if not r.ok]
    return EXIT_SOLVER if failed else EXIT_OK


COMMANDS = {"aggregate": cmd_aggregate, "solve": cmd_solve, "sweep": cmd_sweep,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ProfileError, SystemConfigError, FormulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
