"""Coverage of one-dimensional 95% intervals for the APE of x2.

Rows are DGPs, columns are values of beta2.  Defaults run the full
G0=200, n=500, p=300 design at 300 replications per cell.

    python scripts/coverage_single.py --models M1,M6 --reps 300
"""
from __future__ import annotations

import argparse

from _common import add_common, coverage_cell, write_table
from lassoape import MODELS, DgpSpec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_common(ap)
    ap.add_argument("--models", default=",".join(m for m in MODELS if m != "Fig1"))
    ap.add_argument("--beta2", default="0,0.25,0.5,0.75,1")
    ap.add_argument("--G0", type=int, default=200)
    ap.add_argument("--out", default="coverage_single.csv")
    args = ap.parse_args()

    betas = [float(b) for b in args.beta2.split(",")]
    rows = []
    for model in args.models.split(","):
        row = [model]
        for b in betas:
            row.append(coverage_cell(DgpSpec.scaled(model, args.G0, beta2=b), [1], args))
        rows.append(row)
    write_table(args.out, ["DGP"] + [f"{b:g}" for b in betas], rows)


if __name__ == "__main__":
    main()
