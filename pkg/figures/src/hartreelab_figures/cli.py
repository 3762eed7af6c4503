"""Command-line entry point: render --csv <path> --kind <kind> --out <path>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, FigureSpec, NoDataError, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a hartreelab scan CSV to a figure file.",
    )
    parser.add_argument("--csv", required=True, type=Path, help="input CSV file")
    parser.add_argument(
        "--kind", required=True, choices=sorted(FIGURE_KINDS), help="figure kind"
    )
    parser.add_argument(
        "--out", required=True, type=Path, help="output image path (.png, .pdf, .svg)"
    )
    parser.add_argument("--logx", action="store_true", help="logarithmic x axis")
    parser.add_argument("--logy", action="store_true", help="logarithmic y axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        input_csv=args.csv,
        figure_kind=args.kind,
        output_path=args.out,
        logx=args.logx,
        logy=args.logy,
    )
    try:
        path = render(spec)
    except (SchemaError, NoDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"filesystem error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
