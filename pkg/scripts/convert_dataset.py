#!/usr/bin/env python3
"""Convert a whitespace interchange dump into the native sparse format.

Input layout: a header line `num_points num_features num_labels`, then one
line per point of comma-separated label ids followed by index:value feature
pairs.  Use --one-based when the dump counts labels from 1.
"""

from __future__ import annotations

import argparse
import sys

from fbetamax.dataio import convert_interchange


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("src", help="interchange file to read")
    parser.add_argument("dst", help="native dataset file to write")
    parser.add_argument(
        "--one-based",
        action="store_true",
        help="label ids in src start at 1 instead of 0",
    )
    args = parser.parse_args(argv)
    convert_interchange(args.src, args.dst, zero_based=not args.one_based)
    print(f"wrote {args.dst}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
