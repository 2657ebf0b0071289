"""CLI: render a harness CSV into a figure.

Example::

    bkspd-render --csv trace.csv --x matrix_loads --y rel_err_anorm \\
        --group method --out trace.png

Exit codes: 0 on success, 2 on bad requests or unreadable input.
"""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bkspd-render", description="Render experiment CSV traces"
    )
    parser.add_argument("--csv", action="append", required=True,
                        help="input trace CSV (repeatable)")
    parser.add_argument("--x", required=True, help="x-axis column")
    parser.add_argument("--y", required=True, help="y-axis column")
    parser.add_argument("--group", default="method", help="series grouping column")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--logy", action=argparse.BooleanOptionalAction, default=True,
                        help="logarithmic y-axis (default on)")
    parser.add_argument("--logx", action=argparse.BooleanOptionalAction, default=False,
                        help="logarithmic x-axis")
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        csv_paths=tuple(args.csv),
        x=args.x,
        y=args.y,
        out=args.out,
        group=args.group,
        logy=args.logy,
        logx=args.logx,
        title=args.title,
    )
    try:
        result = render(spec)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.out} with {result.series} series")
    return 0


if __name__ == "__main__":
    sys.exit(main())
