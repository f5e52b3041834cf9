"""Standalone figure tool for zetalab output files.

Exit codes: 0 success, 1 usage or input error, 2 schema mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, render
from .schema import SchemaMismatch


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="zetalab-plots", description=__doc__)
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS,
                        help="figure type")
    parser.add_argument("--input", action="append", required=True,
                        help="input CSV/JSONL file; repeatable")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    scale = parser.add_mutually_exclusive_group()
    scale.add_argument("--log-y", dest="log_y", action="store_true", default=None,
                       help="force a log y-axis")
    scale.add_argument("--linear-y", dest="log_y", action="store_false",
                       help="force a linear y-axis")
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    spec = FigureSpec(inputs=tuple(args.input), kind=args.kind, out=args.out,
                      log_y=args.log_y, title=args.title)
    try:
        render(spec)
    except SchemaMismatch as exc:
        print(f"zetalab-plots: schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"zetalab-plots: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def console_main() -> None:
    raise SystemExit(main())
