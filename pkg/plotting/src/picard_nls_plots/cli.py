"""Standalone figure scripts: CSV paths in, vector image out."""

from __future__ import annotations

import argparse
import sys

from .plots import PlotSpec, SchemaError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="picard-nls-plot",
                                 description="Render figures from solver CSV files")
    ap.add_argument("kind", choices=("convergence", "spectrum"))
    ap.add_argument("csv", nargs="+", help="input CSV path(s)")
    ap.add_argument("--out", required=True, help="output image (svg or pdf)")
    ap.add_argument("--slopes", type=float, nargs="*", default=[],
                    help="reference slopes to overlay")
    ap.add_argument("--xlabel", default="")
    ap.add_argument("--ylabel", default="")
    ap.add_argument("--title", default="")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    spec = PlotSpec(csv_paths=args.csv, kind=args.kind, output=args.out,
                    reference_slopes=args.slopes, xlabel=args.xlabel,
                    ylabel=args.ylabel, title=args.title)
    try:
        out = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
