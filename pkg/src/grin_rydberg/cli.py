"""Command-line entry point: ``grin-rydberg <subcommand> --config FILE``.

Exit status is 0 on success, 1 for domain or data failures and 2 for usage
errors. Set ``GRIN_RYDBERG_LOG`` (e.g. ``INFO``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import RunConfig
from .errors import GrinRydbergError
from .pipeline import SUBCOMMANDS, run

LOG_ENV = "GRIN_RYDBERG_LOG"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grin-rydberg",
        description="Luneburg GRIN lens design and Rydberg receiver analysis")
    parser.add_argument("subcommand", choices=list(SUBCOMMANDS))
    parser.add_argument("--config", type=Path, default=None,
                        help="key = value config file (defaults reproduce the lab setup)")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, {"seed": args.seed})
        out_dir = args.out or cfg["io.out_dir"] or Path("grin_rydberg_out")
        for path in run(args.subcommand, cfg, out_dir):
            print(path)
    except (GrinRydbergError, OSError) as exc:
        print(f"grin-rydberg {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
