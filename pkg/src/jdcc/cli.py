"""Command-line harness: scenario in, CSV out.

Exit codes: 0 success, 1 a validation criterion failed, 2 bad input
(scenario file, flags, infeasible setup), 3 internal numeric failure.
Failures emit one machine-readable JSON record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .errors import DomainError, InfeasibleTarget, QuadratureError, SolverFailure, UnstableLoop
from .scenario import ScenarioError, load_scenario
from .validate import run_acceptance

_EXPERIMENTS = {
    "trajectory": experiments.run_trajectory,
    "stability-map": experiments.run_stability_map,
    "asymptotics": experiments.run_asymptotics,
    "regions": experiments.run_regions,
    "crossover": experiments.run_crossover,
    "outage-single": experiments.run_outage_single,
    "outage-joint": experiments.run_outage_joint,
}

_INPUT_ERRORS = (ScenarioError, FileNotFoundError, DomainError, InfeasibleTarget,
                 UnstableLoop)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jdcc",
        description="Communication/control trade-off experiments and their validation suite.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(_EXPERIMENTS) + ["validate"]:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="scenario file (defaults used if omitted)")
        p.add_argument("--seed", type=int, default=None, help="overrides run.seed")
        p.add_argument("--out", default=None, help="output directory, overrides run.out_dir")
        p.add_argument("--trials", type=int, default=None, help="overrides run.trials")
        p.add_argument("--grid", type=int, default=None, help="overrides run.grid")
    return parser


def _error_record(exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.trials is not None:
        overrides["run.trials"] = args.trials
    if args.grid is not None:
        overrides["run.grid"] = args.grid
    if args.out is not None:
        overrides["run.out_dir"] = args.out

    try:
        scn = load_scenario(args.config, overrides)
    except _INPUT_ERRORS as exc:
        return _error_record(exc, 2)

    out_dir = Path(scn["run.out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    for line in scn.echo_lines():
        print(f"# {line}")

    try:
        if args.command == "validate":
            trials = args.trials  # None -> the suite's own 1e6 default
            results = run_acceptance(scn, trials, progress=lambda r: print(r.line()))
            experiments.write_validation_report(results, scn, out_dir)
            print(f"wrote {out_dir / 'validation_report.csv'}")
            return 0 if all(r.passed for r in results) else 1
        for path in _EXPERIMENTS[args.command](scn, out_dir):
            print(f"wrote {path}")
        return 0
    except _INPUT_ERRORS as exc:
        return _error_record(exc, 2)
    except (SolverFailure, QuadratureError, ArithmeticError) as exc:
        return _error_record(exc, 3)


if __name__ == "__main__":
    sys.exit(main())
