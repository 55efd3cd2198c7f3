"""Command-line figure rendering: one subcommand per figure kind."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_SCHEMAS, EmptyDataError, PlotSpec, SchemaMismatchError, render

_HELP = {
    "weights": "weight curves per assumption p with the scaled Dr. GRPO overlay",
    "deviation": "false-positive advantage deviation across group compositions",
    "robustness": "accuracy per step, mean line with a ±1 std seed band per method",
    "entropy": "policy entropy per step, one curve per trace CSV",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grpolab-plots", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in FIGURE_SCHEMAS:
        p = sub.add_parser(kind, help=_HELP[kind])
        nargs = "+" if kind == "entropy" else None
        p.add_argument("csv", type=Path, nargs=nargs, help="input CSV file(s)")
        p.add_argument("-o", "--output", type=Path, required=True, help="output SVG path")
        p.add_argument("--title", type=str, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    inputs = tuple(args.csv) if isinstance(args.csv, list) else (args.csv,)
    missing = [str(p) for p in inputs if not Path(p).exists()]
    if missing:
        print(f"error: input file(s) not found: {', '.join(missing)}", file=sys.stderr)
        return 2
    spec = PlotSpec(kind=args.kind, inputs=inputs, output=args.output, title=args.title)
    try:
        path = render(spec)
    except (SchemaMismatchError, EmptyDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
