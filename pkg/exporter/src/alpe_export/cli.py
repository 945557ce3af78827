"""Command line entry point.

Subcommands:
  run      export a bundle from a JSON spec file
  fixture  write the built-in two-class color dataset

Exit codes: 0 success, 2 invalid input (spec, dataset, descriptions),
1 filesystem errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExportError
from .export import export
from .fixture import write_fixture
from .spec import load_spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alpe-export",
        description="Encode an image-folder dataset into an embedding bundle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="export a bundle from a spec file")
    run.add_argument("--spec", required=True, help="path to JSON export spec")

    fix = sub.add_parser("fixture", help="write the built-in color dataset")
    fix.add_argument("--out", required=True, help="directory to create")
    fix.add_argument("--seed", type=int, default=0, help="image noise seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            out, summary = export(load_spec(args.spec))
            for key, value in summary.items():
                print(f"{key}={value}", file=sys.stderr)
            print(f"wrote bundle {out}", file=sys.stderr)
        else:
            out = write_fixture(args.out, seed=args.seed)
            print(f"wrote fixture {out}", file=sys.stderr)
    except (ExportError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
