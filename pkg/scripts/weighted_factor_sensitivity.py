"""Sensitivity of Fig1 bias and M1 coverage to the weighted-lasso penalty factor.

The default factor 2 multiplies a penalty whose loadings already carry the
factor 2 of the squared-loss score.  Factor 1 penalizes the weighted lassos at
the same scale as the lasso logit.  This script reports both.

    python scripts/weighted_factor_sensitivity.py --reps 500 --coverage-reps 300
"""
from __future__ import annotations

import argparse

from lassoape import (DgpSpec, EstimatorConfig, PenaltyConfig, run_coverage, run_debiasing,
                      target_set_A)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--factors", default="2,1")
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--coverage-reps", type=int, default=300)
    ap.add_argument("--B", type=int, default=300)
    ap.add_argument("--oracle-n", type=int, default=3_000_000)
    args = ap.parse_args()

    print(f"{'factor':>6} {'DS bias':>9} {'naive':>9} {'cov A1 b2=0':>12} {'cov A10 b2=.5':>14}")
    for f in (float(v) for v in args.factors.split(",")):
        cfg = EstimatorConfig(penalty=PenaltyConfig(weighted_factor=f))
        deb = run_debiasing(reps=args.reps, config=cfg, oracle_n=args.oracle_n)
        c1 = run_coverage(DgpSpec.scaled("M1", 200, beta2=0.0), [1], reps=args.coverage_reps,
                          B=args.B, seed=2, config=cfg, oracle_n=args.oracle_n)
        c10 = run_coverage(DgpSpec.scaled("M1", 200, beta2=0.5), target_set_A(10),
                           reps=args.coverage_reps, B=args.B, seed=3, config=cfg,
                           oracle_n=args.oracle_n)
        print(f"{f:>6g} {deb.ds_bias:>+9.4f} {deb.naive_bias:>+9.4f} {c1.coverage:>12.3f} "
              f"{c10.coverage:>14.3f}", flush=True)


if __name__ == "__main__":
    main()
