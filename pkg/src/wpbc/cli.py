"""Command-line experiment runner.

  wpbc run --scenario S --figure F6 [--draws N --seed S --out DIR
       --set KEY=VALUE --optimize-ce on|off --receiver mrc|zf --estimator ls|mmse]
  wpbc validate --scenario S [--draws N --seed S --out DIR]

Exit code 0 on success; nonzero with a diagnostic on stderr otherwise.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import FIGURES, ExperimentSpec, run_experiment
from .validate import validate_suite


def _parse_set(pairs):
    overrides = {}
    for item in pairs or ():
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        overrides[key.strip()] = val.strip()
    return overrides


def build_parser():
    parser = argparse.ArgumentParser(prog="wpbc",
                                     description="Backscatter energy-beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one figure-reproduction experiment")
    run.add_argument("--scenario", required=True, help="scenario file path")
    run.add_argument("--figure", required=True, choices=sorted(FIGURES),
                     help="figure id")
    run.add_argument("--draws", type=int, default=10000, help="Monte Carlo draws per point")
    run.add_argument("--seed", type=int, default=1234)
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a scenario key or sweep grid (repeatable)")
    run.add_argument("--optimize-ce", choices=("on", "off"), default="off",
                     help="optimize CE duration and pilot power (default: pinned)")
    run.add_argument("--receiver", choices=("mrc", "zf"), default="mrc")
    run.add_argument("--estimator", choices=("ls", "mmse"), default="ls")

    val = sub.add_parser("validate", help="run the invariant battery")
    val.add_argument("--scenario", required=True)
    val.add_argument("--draws", type=int, default=20000)
    val.add_argument("--seed", type=int, default=20240)
    val.add_argument("--out", default=None, help="directory for validate_report.json")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            spec = ExperimentSpec(
                figure_id=args.figure,
                scenario=args.scenario,
                out_dir=args.out,
                n_draws=args.draws,
                seed=args.seed,
                overrides=_parse_set(args.set),
                optimize_ce=args.optimize_ce == "on",
                receiver=args.receiver,
                estimator=args.estimator,
            )
            manifest = run_experiment(spec)
            for name, digest in manifest["outputs"].items():
                print(f"wrote {name} sha256={digest[:12]}... "
                      f"({manifest['wall_seconds']}s)")
        else:
            report = validate_suite(args.scenario, n=args.draws, seed=args.seed,
                                    out_dir=args.out)
            for entry in report["entries"]:
                status = "PASS" if entry["passed"] else "FAIL"
                print(f"{status} {entry['name']}: measured={entry['measured']!r} "
                      f"threshold={entry['threshold']!r}")
            print(("all invariants passed" if report["all_passed"]
                   else "some invariants FAILED (see report)"))
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(f"wpbc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
