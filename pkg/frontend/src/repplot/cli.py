"""Command-line interface of the plotting front end.

Consumes the optimiser's documented file formats (frontier and grid CSV,
scheme graph text) and writes image files.  `--dump` writes the parsed
numeric table back out, byte-identical to the input.
"""

from __future__ import annotations

import argparse
import sys

from .render import plot_frontier, plot_heatmap, plot_scheme
from .tables import FrontierTable, Table, TableError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repplot")
    sub = parser.add_subparsers(dest="verb", required=True)

    frontier = sub.add_parser("frontier")
    frontier.add_argument("inputs", nargs="+", help="frontier CSV files")
    frontier.add_argument("--out", "-o", required=True, help="output image path")
    frontier.add_argument("--labels", nargs="*", default=None)
    frontier.add_argument("--title", default="")
    frontier.add_argument("--dump", default=None, help="write parsed values back out")

    heatmap = sub.add_parser("heatmap")
    heatmap.add_argument("input", help="sweep grid CSV")
    heatmap.add_argument("--out", "-o", required=True)
    heatmap.add_argument("--targets", nargs="*", default=None, help="rate columns to panel")
    heatmap.add_argument("--dump", default=None)

    scheme = sub.add_parser("scheme")
    scheme.add_argument("input", help="scheme graph text file")
    scheme.add_argument("--out", "-o", required=True)
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.verb == "frontier":
            labels = args.labels or [""] * len(args.inputs)
            if len(labels) != len(args.inputs):
                print("need one label per input", file=sys.stderr)
                return 1
            tables = [
                FrontierTable.read(path, label)
                for path, label in zip(args.inputs, labels)
            ]
            plot_frontier(tables, args.out, title=args.title)
            if args.dump:
                with open(args.dump, "w") as handle:
                    handle.write(tables[0].table.dump())
        elif args.verb == "heatmap":
            grid = Table.read(args.input)
            plot_heatmap(grid, args.out, targets=args.targets)
            if args.dump:
                with open(args.dump, "w") as handle:
                    handle.write(grid.dump())
        elif args.verb == "scheme":
            with open(args.input) as handle:
                plot_scheme(handle.read(), args.out)
    except (TableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
