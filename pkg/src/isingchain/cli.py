"""Command-line interface: ``isingchain solve|sweep|plan|validate|export``.

Exit codes: 0 success, 1 solver failure or fidelity below threshold,
2 usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from .chain import HALF_PI, TransferEndpoints, load_chain, normalize_chain
from .errors import DomainError, IsingChainError, ParseError
from .geodesic import conventional_time, shoot
from .planner import (assemble_chain_pulse, conventional_plan_schedule, dp_solve, objective_curve,
                      simulate_chain)
from .pulse import (conventional_sequence, full_target, read_pulse_csv, reconstruct_control,
                    schedule_to_csv, simulate_full)
from .sweep import KINDS, SweepRequest, rows_to_csv, run_sweep

SINGLE_THRESHOLD = 1.0 - 1e-6
CHAIN_THRESHOLD = 1.0 - 1e-5

_ANGLE = re.compile(
    r"^(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*(?P<unit>deg|rad|pi)?"
    r"(?:\s*/\s*(?P<den>\d+\.?\d*))?$")


class UsageError(Exception):
    pass


def parse_angle(text: str) -> float:
    """``90deg``, ``0.5pi``, ``pi/4``, ``1.2rad`` or a bare number in radians."""
    m = _ANGLE.match(text.strip())
    if not m or (m.group("num") is None and m.group("unit") != "pi"):
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}")
    num = float(m.group("num")) if m.group("num") is not None else 1.0
    unit = m.group("unit") or "rad"
    if unit == "deg":
        value = math.radians(num)
    elif unit == "pi":
        value = num * math.pi
    else:
        value = num
    if m.group("den") is not None:
        den = float(m.group("den"))
        if den == 0.0:
            raise argparse.ArgumentTypeError(f"zero denominator in {text!r}")
        value /= den
    # snap values that round-trip to pi/2 so the boundary stays exact
    if abs(value - HALF_PI) <= 4e-16:
        value = HALF_PI
    return value


def parse_grid(text: str, convert) -> list:
    """Comma-separated values, or ``start:stop:count`` for an even grid."""
    text = text.strip()
    if text.count(":") == 2:
        a, b, n = text.split(":")
        try:
            count = int(n)
        except ValueError:
            raise argparse.ArgumentTypeError(f"grid count {n!r} is not an integer") from None
        if count < 1:
            raise argparse.ArgumentTypeError("grid count must be at least 1")
        lo, hi = convert(a), convert(b)
        if count == 1:
            return [lo]
        values = list(np.linspace(lo, hi, count))
        values[-1] = hi
        return [float(v) for v in values]
    return [convert(part) for part in text.split(",") if part.strip()]


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not (math.isfinite(value) and value > 0.0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write(path, text: str):
    if path is None:
        return
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _solution_summary(sol) -> dict:
    conv = conventional_time(sol.k, sol.alpha, sol.beta)
    return {
        "k": sol.k, "alpha": sol.alpha, "beta": sol.beta, "duration": sol.duration,
        "theta0": sol.theta0, "theta_dot0": sol.theta_dot0, "c": sol.c,
        "conventional_time": conv, "ratio": sol.duration / conv if conv > 0 else 1.0,
        "residuals": sol.residuals(), "units": "1/J_ref",
    }


def _out_paths(args, names):
    out = {}
    base = Path(args.out_dir) if args.out_dir else None
    for key, default in names.items():
        explicit = getattr(args, key, None)
        out[key] = explicit if explicit else (base / default if base else None)
    return out


def cmd_solve(args) -> int:
    endpoints = TransferEndpoints(args.alpha, args.beta)
    sol = shoot(args.k, endpoints)
    schedule = reconstruct_control(sol)
    x0 = np.array([math.cos(args.alpha), math.sin(args.alpha), 0.0, 0.0])
    report = simulate_full(schedule, args.k, x0, full_target(args.beta))
    summary = _solution_summary(sol)
    paths = _out_paths(args, {"solution_json": "solution.json", "pulse_csv": "pulse.csv",
                              "report_json": "report.json"})
    _write(paths["solution_json"], _dump_json(summary))
    _write(paths["pulse_csv"], schedule_to_csv(schedule, args.points))
    _write(paths["report_json"], report.to_json())
    ok = report.fidelity >= args.threshold
    print(_dump_json({"duration": sol.duration, "ratio": summary["ratio"],
                      "fidelity": report.fidelity, "passed": ok}), end="")
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    chain = None
    if args.chain:
        chain = normalize_chain(load_chain(args.chain), args.ref_index)
    grids = {"k": args.k, "alpha": args.alpha, "beta": args.beta, "gamma": args.gamma}
    if args.kind == "time_vs_alpha_beta" and grids["k"] is None:
        grids["k"] = [1.0]
    req = SweepRequest(args.kind, {k: v for k, v in grids.items() if v is not None}, chain)
    rows = run_sweep(req, jobs=args.jobs)
    text = rows_to_csv(req.columns, rows)
    _write(args.output or "-", text)
    failed = sum(1 for r in rows if r[-1])
    if failed:
        print(f"{failed} of {len(rows)} sweep points failed", file=sys.stderr)
        return 1
    return 0


def cmd_plan(args) -> int:
    chain = normalize_chain(load_chain(args.chain_file), args.ref_index)
    plan = dp_solve(chain, args.grid)
    schedule = assemble_chain_pulse(plan)
    report = simulate_chain(schedule, chain)
    paths = _out_paths(args, {"plan_json": "plan.json", "pulse_csv": "pulse.csv",
                              "report_json": "report.json"})
    _write(paths["plan_json"], plan.to_json())
    _write(paths["pulse_csv"], schedule_to_csv(schedule, args.points))
    _write(paths["report_json"], report.to_json())
    if args.objective_curve:
        gammas = args.gammas or parse_grid(f"0:{HALF_PI!r}:91", float)
        curve = objective_curve(chain, gammas)
        _write(args.objective_curve, rows_to_csv(("gamma", "J"), curve))
    ok = report.fidelity >= args.threshold
    summary = {"betas": list(plan.betas), "total_time": plan.total_time,
               "conventional_time": plan.conventional_time,
               "savings_percent": plan.savings_percent, "fidelity": report.fidelity,
               "passed": ok}
    print(_dump_json(summary), end="")
    return 0 if ok else 1


def cmd_validate(args) -> int:
    schedule = read_pulse_csv(args.pulse_csv)
    if args.chain:
        chain = normalize_chain(load_chain(args.chain), args.ref_index)
        report = simulate_chain(schedule, chain)
    else:
        if args.k is None:
            raise UsageError("validate needs --k or --chain")
        x0 = np.array([math.cos(args.alpha), math.sin(args.alpha), 0.0, 0.0])
        report = simulate_full(schedule, args.k, x0, full_target(args.beta))
    threshold = args.threshold if args.threshold is not None else CHAIN_THRESHOLD
    ok = report.fidelity >= threshold
    data = report.to_dict()
    data["passed"] = ok
    _write(args.report_json, report.to_json())
    print(_dump_json(data), end="")
    return 0 if ok else 1


def cmd_export(args) -> int:
    if args.chain:
        chain = normalize_chain(load_chain(args.chain), args.ref_index)
        if args.what == "conventional":
            schedule = conventional_plan_schedule(chain)
        else:
            schedule = assemble_chain_pulse(dp_solve(chain, args.grid))
    else:
        if args.k is None:
            raise UsageError("export needs --k or --chain")
        if args.what == "conventional":
            schedule = conventional_sequence(args.k, n_qubit_form=args.n_qubit_form)
        else:
            schedule = reconstruct_control(shoot(args.k, TransferEndpoints(args.alpha, args.beta)))
    _write(args.output or "-", schedule_to_csv(schedule, args.points))
    return 0


def _add_chain_flags(p, required=False):
    if required:
        p.add_argument("chain_file", help='chain JSON {"couplings_hz": [...]}')
    else:
        p.add_argument("--chain", help='chain JSON {"couplings_hz": [...]}')
    p.add_argument("--ref-index", type=int, default=0,
                   help="0-based coupling used as the time unit (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isingchain",
        description="Time-optimal coherence transfer in Ising spin chains. Angles accept "
                    "deg, rad or pi suffixes (90deg, 0.5pi, pi/2); bare numbers are radians.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal single-segment transfer for coupling ratio k")
    p.add_argument("--k", type=_positive, required=True, help="coupling ratio J23/J12")
    p.add_argument("--alpha", type=parse_angle, default=0.0, help="start angle (default 0)")
    p.add_argument("--beta", type=parse_angle, default=HALF_PI, help="target angle (default 90deg)")
    p.add_argument("--out-dir", help="write solution.json, pulse.csv and report.json here")
    p.add_argument("--solution-json")
    p.add_argument("--pulse-csv")
    p.add_argument("--report-json")
    p.add_argument("--points", type=int, default=1000, help="exported samples per segment")
    p.add_argument("--threshold", type=float, default=SINGLE_THRESHOLD)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--k", type=lambda s: parse_grid(s, _positive), help="k grid, e.g. 0.1,1,10 or 0.5:5:10")
    p.add_argument("--alpha", type=lambda s: parse_grid(s, parse_angle))
    p.add_argument("--beta", type=lambda s: parse_grid(s, parse_angle))
    p.add_argument("--gamma", type=lambda s: parse_grid(s, parse_angle))
    _add_chain_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plan", help="dynamic-programming plan for a chain")
    _add_chain_flags(p, required=True)
    p.add_argument("--grid", type=int, default=129, help="boundary-angle grid points")
    p.add_argument("--out-dir")
    p.add_argument("--plan-json")
    p.add_argument("--pulse-csv")
    p.add_argument("--report-json")
    p.add_argument("--objective-curve", help="write the J(gamma) dataset (4-spin chains)")
    p.add_argument("--gammas", type=lambda s: parse_grid(s, parse_angle))
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=CHAIN_THRESHOLD)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="re-simulate an exported pulse CSV")
    p.add_argument("pulse_csv")
    p.add_argument("--k", type=_positive, help="ratio for the single-segment system")
    p.add_argument("--alpha", type=parse_angle, default=0.0)
    p.add_argument("--beta", type=parse_angle, default=HALF_PI)
    _add_chain_flags(p)
    p.add_argument("--threshold", type=float, default=None,
                   help=f"fidelity threshold (default {CHAIN_THRESHOLD!r})")
    p.add_argument("--report-json")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export", help="write a pulse CSV")
    p.add_argument("what", choices=("conventional", "optimal"))
    p.add_argument("--k", type=_positive)
    p.add_argument("--alpha", type=parse_angle, default=0.0)
    p.add_argument("--beta", type=parse_angle, default=HALF_PI)
    _add_chain_flags(p)
    p.add_argument("--grid", type=int, default=129)
    p.add_argument("--n-qubit-form", action="store_true",
                   help="append the closing local pulses (not exported to CSV)")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DomainError, ParseError) as exc:
        print(f"isingchain: error: {exc}", file=sys.stderr)
        return 2
    except IsingChainError as exc:
        print(f"isingchain: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
