"""Command-line entry point: ``uavpec {generate,solve,sweep,compare,verify}``.

Exit codes: 0 ok, 2 validation, 3 infeasible, 4 size guard, 5 missing file,
1 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import InfeasibleError, SchemaVersionError, SizeGuardError, ValidationError
from .gjra import Scheme, channel_table_for, ea_size, EA_SIZE_LIMIT, solve
from .model import (DEFAULT_AREA_SIDE_M, PhysicsConfig, SolverConfig, TaskRanges, UavBudget,
                    generate_scenario, load_scenario, save_scenario)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_SIZE_GUARD = 4
EXIT_MISSING_FILE = 5

log = logging.getLogger("uavpec")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(eps_inner=args.eps_inner, eps_outer=args.eps_outer, k_max=args.k_max,
                        r_max=args.r_max, step0=args.step0, rng_seed=args.seed)


def _add_solver_flags(p):
    d = SolverConfig()
    p.add_argument("--seed", type=int, default=d.rng_seed, help="RNG seed for the RS baseline")
    p.add_argument("--eps-inner", type=float, default=d.eps_inner)
    p.add_argument("--eps-outer", type=float, default=d.eps_outer)
    p.add_argument("--k-max", type=int, default=d.k_max)
    p.add_argument("--r-max", type=int, default=d.r_max)
    p.add_argument("--step0", type=float, default=d.step0)


def cmd_generate(args) -> int:
    physics = PhysicsConfig(altitude_m=args.altitude, bandwidth_hz=args.bandwidth,
                            max_device_freq_hz=args.f_ue_max, elevation_convention=args.elevation)
    budget = UavBudget(cpu_max_hz=args.f_uav_max, power_max_w=args.p_max)
    ranges = TaskRanges(bits=(args.bits_min, args.bits_max), cycles=(args.cycles_min, args.cycles_max))
    s = generate_scenario(args.n, args.m, args.side, args.seed, physics, budget, ranges)
    save_scenario(s, args.out)
    print(f"wrote {args.out}: {s.n} devices, {s.m} hover positions")
    return EXIT_OK


def cmd_solve(args) -> int:
    s = load_scenario(args.scenario)
    if args.dump_channel:
        channel_table_for(s).to_csv(args.dump_channel)
    rep = solve(s, args.scheme, _solver_config(args))
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_dict(timing=not args.no_timing), indent=2) + "\n",
                                  encoding="utf-8")
    if args.emit == "breakdown":
        print(json.dumps(rep.breakdown.to_dict(), indent=2))
    else:
        print(f"{rep.scheme.value}: total latency {rep.total_latency:.12g} s, rounds {rep.rounds}, "
              f"converged {str(rep.converged).lower()}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import load_sweep_spec, run_sweep, summarize, write_rows_csv, write_summary_csv

    spec = load_sweep_spec(args.spec)
    rows = run_sweep(spec, jobs=args.jobs)
    write_rows_csv(rows, args.out, timing=not args.no_timing)
    summary_path = args.summary or _summary_path(args.out)
    write_summary_csv(summarize(rows), summary_path)
    print(f"wrote {len(rows)} rows to {args.out} and the summary to {summary_path}")
    return EXIT_OK


def _summary_path(out):
    root, ext = os.path.splitext(os.fspath(out))
    return f"{root}_summary{ext or '.csv'}"


def cmd_compare(args) -> int:
    s = load_scenario(args.scenario)
    if ea_size(s) > EA_SIZE_LIMIT:
        raise SizeGuardError(f"exhaustive search needs (2M)^N = {ea_size(s)} > {EA_SIZE_LIMIT} candidates")
    cfg = _solver_config(args)
    reports = {sch: solve(s, sch, cfg) for sch in (Scheme.EA, Scheme.GJRA, Scheme.NP, Scheme.RS)}
    ea = reports[Scheme.EA].total_latency
    print(f"{'scheme':<6} {'total_latency_s':>18} {'gap_to_ea':>12}")
    rows = []
    for sch in (Scheme.GJRA, Scheme.RS, Scheme.NP, Scheme.EA):
        val = reports[sch].total_latency
        gap = (val - ea) / ea
        rows.append({"scheme": sch.value, "total_latency_s": float(f"{val:.12g}"), "gap_to_ea": float(f"{gap:.12g}")})
        print(f"{sch.value:<6} {val:>18.12g} {gap:>12.6g}")
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import check_allocation, oracle_suite

    reports = oracle_suite(args.instances, args.seed, args.tol)
    groups: dict = {}
    for r in reports:
        groups.setdefault(r.label.split()[0], []).append(r)
    print(f"{'oracle':<12} {'cases':>6} {'max|gap|':>12} {'max|cap slack|':>15} {'status':>7}")
    ok = True
    for name, rs in groups.items():
        passed = all(r.passed for r in rs)
        ok &= passed
        print(f"{name:<12} {len(rs):>6} {max(abs(r.relative_gap) for r in rs):>12.3g} "
              f"{max(abs(r.constraint_residuals) for r in rs):>15.3g} {'ok' if passed else 'FAIL':>7}")
    for r in reports:
        if args.verbose or not r.passed:
            print(f"  {r.label:<18} closed={r.closed_form_objective:.12g} numeric={r.numeric_objective:.12g} "
                  f"gap={r.relative_gap:.3g} slack={r.constraint_residuals:.3g} {'ok' if r.passed else 'FAIL'}")
    if args.scenario:
        s = load_scenario(args.scenario)
        table = channel_table_for(s)
        cfg = _solver_config(args)
        for sch in (Scheme.GJRA, Scheme.NP, Scheme.RS):
            issues = check_allocation(s, table, solve(s, sch, cfg).final_alloc)
            ok &= not issues
            print(f"{sch.value:<6} allocation check: {'ok' if not issues else '; '.join(issues)}")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavpec", description="Joint offloading/charging/CPU/connection "
                                "allocation for a UAV serving wirelessly powered devices.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random scenario and save it as JSON")
    g.add_argument("--n", type=int, default=50, help="number of devices")
    g.add_argument("--m", type=int, default=4, help="number of hover positions")
    g.add_argument("--side", type=float, default=DEFAULT_AREA_SIDE_M, help="square side length, m")
    g.add_argument("--seed", type=int, default=0)
    tr, ph, bu = TaskRanges(), PhysicsConfig(), UavBudget()
    g.add_argument("--bits-min", type=float, default=tr.bits[0])
    g.add_argument("--bits-max", type=float, default=tr.bits[1])
    g.add_argument("--cycles-min", type=float, default=tr.cycles[0])
    g.add_argument("--cycles-max", type=float, default=tr.cycles[1])
    g.add_argument("--altitude", type=float, default=ph.altitude_m)
    g.add_argument("--bandwidth", type=float, default=ph.bandwidth_hz)
    g.add_argument("--f-ue-max", type=float, default=ph.max_device_freq_hz)
    g.add_argument("--f-uav-max", type=float, default=bu.cpu_max_hz)
    g.add_argument("--p-max", type=float, default=bu.power_max_w)
    g.add_argument("--elevation", choices=["horizontal", "slant"], default="horizontal")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one scenario with one scheme")
    s.add_argument("scenario")
    s.add_argument("--scheme", choices=[x.value for x in Scheme], default="GJRA")
    s.add_argument("--out", help="write the solve report as JSON")
    s.add_argument("--emit", choices=["summary", "breakdown"], default="summary")
    s.add_argument("--dump-channel", metavar="CSV", help="write the channel table")
    s.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0 for reproducible output")
    _add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a parameter sweep described by a JSON spec")
    w.add_argument("spec")
    w.add_argument("--out", required=True, help="per-run CSV")
    w.add_argument("--summary", help="median CSV (default: <out>_summary.csv)")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--no-timing", action="store_true")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="all schemes on one small scenario, with gaps to exhaustive search")
    c.add_argument("scenario")
    c.add_argument("--out", help="write the comparison as JSON")
    _add_solver_flags(c)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", help="check closed forms against numeric oracles")
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("--tol", type=float, default=1e-6)
    v.add_argument("--scenario", help="also solve this scenario and check every allocation")
    v.add_argument("--verbose", action="store_true")
    _add_solver_flags(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    level = os.environ.get("GJRA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (ValidationError, SchemaVersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD


if __name__ == "__main__":
    sys.exit(main())
