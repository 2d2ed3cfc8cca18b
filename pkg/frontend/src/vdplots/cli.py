"""`vdplots render --kind flux --in flux.csv --out fig.png`"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, PlotSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdplots", description="figures from vdflux CSV tables")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one CSV to one image")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="csv_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--linear-y", action="store_true", help="linear instead of log y axis")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(args.kind, Path(args.csv_path), Path(args.out_path),
                        logy=not args.linear_y)
        render(spec)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
