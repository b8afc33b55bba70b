#!/usr/bin/env python3
"""Run every scenario config in configs/ and collect the CSVs under results/.

Each config resolves its own output path relative to its directory, so the
batch is reproducible from the configs alone; rerunning must produce
byte-identical files.
"""

import argparse
import sys
from pathlib import Path

from heraldkick import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--configs",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "configs",
        help="directory of scenario TOML files",
    )
    parser.add_argument("--match", default="", help="only run configs whose name contains this")
    parser.add_argument("--threads", type=int, default=None, metavar="N")
    args = parser.parse_args()

    paths = sorted(p for p in args.configs.glob("*.toml") if args.match in p.name)
    if not paths:
        print(f"no configs matching {args.match!r} under {args.configs}", file=sys.stderr)
        return 2

    for path in paths:
        print(f"== {path.name}")
        argv = ["run", str(path)]
        if args.threads is not None:
            argv += ["--threads", str(args.threads)]
        code = cli.main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
