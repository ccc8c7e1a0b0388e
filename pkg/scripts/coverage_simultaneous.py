"""Coverage of 95% simultaneous intervals over the target sets A_m.

A_1 is {x2}; A_m for m > 1 is x2 through x(m), i.e. the first m - 1
non-intercept covariates.  beta2 is 0.5 throughout.

    python scripts/coverage_simultaneous.py --models M1 --sets 1,2,3,5,10
"""
from __future__ import annotations

import argparse

from _common import add_common, coverage_cell, write_table
from lassoape import DgpSpec, target_set_A


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_common(ap)
    ap.add_argument("--models", default="M1,M2,M3,M4,M5")
    ap.add_argument("--sets", default="1,2,3,5,10,20,30,40,50,100")
    ap.add_argument("--G0", type=int, default=200)
    ap.add_argument("--out", default="coverage_simultaneous.csv")
    args = ap.parse_args()

    sets = [int(m) for m in args.sets.split(",")]
    rows = []
    for model in args.models.split(","):
        spec = DgpSpec.scaled(model, args.G0, beta2=0.5)
        rows.append([model] + [coverage_cell(spec, target_set_A(m), args) for m in sets])
    write_table(args.out, ["DGP"] + [f"A{m}" for m in sets], rows)


if __name__ == "__main__":
    main()
