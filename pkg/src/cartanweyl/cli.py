"""Command-line interface: scenario checks, tensor dumps, DOF table.

Subcommands:
  check      run a verification suite (gauge | dressing | weyl | brs | all)
  compute    dump the extracted tensors at every sample point
  transform  finite Weyl action cross-checks (the weyl suite)
  brs        ghost-algebra cross-checks (the brs suite)
  dof        degrees-of-freedom accounting table

Exit codes: 0 all checks pass, 1 a check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys

from .checks import compute_tensors, dof_report, run_check
from .errors import CartanWeylError
from .scenarios import CATALOG_NAMES, Scenario, catalog


def _add_scenario_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="path to a scenario JSON file")
    src.add_argument("--catalog", choices=CATALOG_NAMES,
                     help="built-in scenario name")
    p.add_argument("--dimension", type=int, default=3,
                   help="chart dimension for catalog scenarios (default 3)")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for the scramble generators")
    p.add_argument("--tolerance", type=float, default=None,
                   help="override the scenario tolerance")
    p.add_argument("--jet-order", type=int, default=None,
                   help="override the scenario jet order")
    p.add_argument("--json", dest="json_path",
                   help="write the full report to this path")
    p.add_argument("--points-parallel", action="store_true",
                   help="evaluate sample points on a thread pool")


def _load_scenario(args):
    if args.scenario:
        scn = Scenario.load(args.scenario)
    else:
        scn = catalog(args.catalog, m=args.dimension,
                      jet_order=args.jet_order or 4)
    if args.seed is not None:
        scn.seed = args.seed
    if args.tolerance is not None:
        scn.tolerance = args.tolerance
    if args.jet_order is not None:
        scn.jet_order = args.jet_order
    return scn


def _emit(report, args):
    for line in report.summary_lines():
        print(line)
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        print(f"report written to {args.json_path}")
    return 0 if report.passed else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cartanweyl",
        description="Conformal Cartan connection dressing and its Weyl/BRS "
                    "verification engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="run a verification suite")
    _add_scenario_args(p_check)
    p_check.add_argument("--suite", default="all",
                         choices=("gauge", "dressing", "weyl", "brs", "all"))

    p_compute = sub.add_parser("compute", help="dump extracted tensors")
    _add_scenario_args(p_compute)

    p_transform = sub.add_parser("transform", help="finite Weyl cross-checks")
    _add_scenario_args(p_transform)

    p_brs = sub.add_parser("brs", help="BRS ghost-algebra cross-checks")
    _add_scenario_args(p_brs)

    p_dof = sub.add_parser("dof", help="degrees-of-freedom table")
    p_dof.add_argument("-m", "--dimension", type=int, default=4)
    p_dof.add_argument("--json", dest="json_path")

    args = parser.parse_args(argv)
    try:
        if args.command == "dof":
            table = dof_report(args.dimension)
            text = json.dumps(table, indent=2, sort_keys=True)
            print(text)
            if args.json_path:
                with open(args.json_path, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            return 0 if table["columns_agree"] else 1
        scn = _load_scenario(args)
        parallel = args.points_parallel
        if args.command == "check":
            report = run_check(scn, args.suite, points_parallel=parallel)
        elif args.command == "compute":
            report = compute_tensors(scn)
        elif args.command == "transform":
            report = run_check(scn, "weyl", points_parallel=parallel)
        else:
            report = run_check(scn, "brs", points_parallel=parallel)
        return _emit(report, args)
    except CartanWeylError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
