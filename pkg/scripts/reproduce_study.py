"""Run the built-in reverberant study end to end and print the summary.

Equivalent to `sfsplace reproduce-paper`; takes a few minutes.

Usage: python scripts/reproduce_study.py [--out DIR] [--threads N]
"""

import argparse
import json

from sfsplace import run_reproduce


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="paper_out")
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()
    summary = run_reproduce(out_dir=args.out, threads=args.threads)
    print(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
