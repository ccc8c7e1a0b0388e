"""Simultaneous coverage over A_10 as the design grows.

Uses p = 1.5 G0 and n = 2.5 G0 with beta2 = 0.5.

    python scripts/coverage_growth.py --models M1 --G0 200,400
"""
from __future__ import annotations

import argparse

from _common import add_common, coverage_cell, write_table
from lassoape import DgpSpec, target_set_A


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_common(ap)
    ap.add_argument("--models", default="M1,M2,M3,M4,M5")
    ap.add_argument("--G0", default="200,400,600,800")
    ap.add_argument("--out", default="coverage_growth.csv")
    args = ap.parse_args()

    sizes = [int(g) for g in args.G0.split(",")]
    targets = target_set_A(10)
    rows = []
    for model in args.models.split(","):
        rows.append([model] + [coverage_cell(DgpSpec.scaled(model, g, beta2=0.5), targets, args)
                               for g in sizes])
    write_table(args.out, ["DGP"] + [f"G0={g}" for g in sizes], rows)


if __name__ == "__main__":
    main()
