"""Batch figure renderer.

  plotfigs render --csv PATH --recipe PATH --out PATH
"""

from __future__ import annotations

import argparse
import sys

from .render import render


def build_parser():
    parser = argparse.ArgumentParser(prog="plotfigs",
                                     description="Render wpbc figure CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one CSV with one recipe")
    r.add_argument("--csv", required=True, help="input CSV path")
    r.add_argument("--recipe", required=True, help="recipe JSON path")
    r.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        summary = render(args.recipe, args.csv, args.out)
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(f"plotfigs: error: {exc}", file=sys.stderr)
        return 2
    print(f"rendered {summary.figure_id}: {summary.curves_drawn} curves, "
          f"{summary.points} points -> {summary.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
