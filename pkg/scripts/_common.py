"""Shared helpers for the coverage scripts."""
from __future__ import annotations

import csv
import time

from lassoape import run_coverage


def coverage_cell(spec, targets, args) -> float:
    t0 = time.perf_counter()
    rep = run_coverage(spec, targets, reps=args.reps, B=args.B, seed=args.seed,
                       oracle_n=args.oracle_n, n_jobs=args.jobs)
    print(f"  {spec.model:>4} beta2={spec.beta2:<5g} G0={spec.G0:<4} |A|={len(targets):<3} "
          f"coverage {rep.coverage:.3f} (se {rep.mc_se:.3f}, failures {rep.failures}) "
          f"{time.perf_counter() - t0:.0f}s", flush=True)
    return rep.coverage


def add_common(ap) -> None:
    ap.add_argument("--reps", type=int, default=300)
    ap.add_argument("--B", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--oracle-n", type=int, default=3_000_000)
    ap.add_argument("--jobs", type=int, default=1, help="joblib workers over replications")


def write_table(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row[0]] + [f"{v:.3f}" for v in row[1:]])
    print(f"wrote {path}")
