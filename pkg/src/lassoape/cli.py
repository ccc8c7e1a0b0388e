"""Command-line front end: ``lassoape {fit,ape,test,ci,simulate}``.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error.  Output is
a pure function of the input files, flags and seed; wall-clock timing is only
emitted with ``--timing``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ape import fit_apes, fit_beta, results_json
from .bootstrap import REPORT_SCHEMA_VERSION, bootstrap_maxima, critical_value
from .config import BootstrapConfig, EstimatorConfig, apply_overrides, env_overrides, flatten
from .data import CsvSchema, load_long_csv, load_sparse_triplets
from .errors import ConfigError, DataError, LassoApeError, NumericalError
from .simulation import MODELS, DgpSpec, run_coverage, target_set_A

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2
SIM_SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: cannot parse {text!r} as comma-separated numbers") from None


def _levels(args) -> list[float]:
    text = args.levels if args.levels is not None else args.level
    levels = _floats(text, "--levels")
    if not levels:
        raise UsageError("--levels: need at least one level")
    for a in levels:
        if not 0.0 < a < 1.0:
            raise UsageError(f"level {a} outside (0, 1)")
    return levels


def _load_config(args) -> EstimatorConfig:
    overrides: dict[str, object] = dict(env_overrides())
    if args.config:
        try:
            overrides.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: {exc}") from None
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    overrides["threads"] = args.threads
    try:
        return apply_overrides(EstimatorConfig(), overrides)
    except (ConfigError, TypeError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from None


def _load_data(args):
    if args.sparse:
        if not args.labels:
            raise UsageError("--sparse needs --labels")
        return load_sparse_triplets(args.sparse, args.labels, intercept=args.intercept)
    if not args.input:
        raise UsageError("give --input CSV or --sparse/--labels")
    covs = tuple(c for c in args.covariates.split(",") if c) if args.covariates else None
    return load_long_csv(args.input, CsvSchema(args.cluster_col, args.outcome_col, covs))


def _resolve_targets(ds, text: str | None) -> list[int]:
    if not text:
        raise UsageError("--targets is required")
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if tok in ds.columns:
            out.append(ds.columns.index(tok))
        elif tok.lstrip("-").isdigit():
            k = int(tok)
            if not 0 <= k < ds.p:
                raise UsageError(f"target index {k} outside [0, {ds.p})")
            out.append(k)
        else:
            raise UsageError(f"unknown column {tok!r}; available: {', '.join(ds.columns)}")
    if not out:
        raise UsageError("--targets is empty")
    if len(set(out)) != len(out):
        raise UsageError("--targets lists a column twice")
    return out


def _nulls(args, m: int) -> np.ndarray:
    if args.nulls is None:
        return np.zeros(m)
    vals = _floats(args.nulls, "--nulls")
    if len(vals) != m:
        raise UsageError(f"--nulls has {len(vals)} values for {m} targets")
    return np.asarray(vals)


def _meta(args, command: str, cfg: EstimatorConfig) -> dict:
    meta = {"command": command, "seed": args.seed, "version": __version__,
            "config": {k: v for k, v in flatten(cfg).items() if k != "threads"}}
    if args.input:
        meta["input"] = os.path.basename(args.input)
    elif args.sparse:
        meta["input"] = os.path.basename(args.sparse)
    return meta


# ---------------------------------------------------------------- rendering


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _table_text(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in cells]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    ds = _load_data(args)
    lasso, post, pen = fit_beta(ds, cfg.penalty, cfg.solver)
    rows = [[int(j), ds.columns[j], float(lasso.coef[j]), float(post.beta[j])] for j in lasso.support]
    header = ["k", "name", "lasso", "post_lasso"]
    if args.format == "json":
        doc = {"schema_version": 1, **_meta(args, "fit", cfg), "lambda": float(pen.lam),
               "G": ds.G, "n": ds.n, "p": ds.p, "converged": bool(post.converged),
               "coefficients": [dict(zip(header, r)) for r in rows]}
        _emit(args, _dumps(doc))
    elif args.format == "csv":
        _emit(args, _csv_text(header, rows))
    else:
        _emit(args, _table_text(header, rows))
    return EXIT_OK


def _fit_targets(args):
    cfg = _load_config(args)
    ds = _load_data(args)
    targets = _resolve_targets(ds, args.targets)
    results, _ = fit_apes(ds, targets, cfg)
    return cfg, ds, targets, results


def cmd_ape(args) -> int:
    cfg, ds, targets, results = _fit_targets(args)
    names = [ds.columns[k] for k in targets]
    header = ["k", "name", "alpha_tilde", "ape", "sigma_tilde", "support_size"]
    rows = [[r.k, nm, r.alpha_tilde, r.ape, r.sigma_tilde, int(r.support_union.size)]
            for r, nm in zip(results, names)]
    if args.format == "json":
        meta = {**_meta(args, "ape", cfg), "G": ds.G, "n": ds.n, "p": ds.p}
        _emit(args, results_json(results, names, meta) + "\n")
    elif args.format == "csv":
        _emit(args, _csv_text(header, rows))
    else:
        _emit(args, _table_text(header, rows))
    return EXIT_OK


def _inference(args, command: str) -> int:
    levels = _levels(args)
    cfg, ds, targets, results = _fit_targets(args)
    nulls = _nulls(args, len(targets))
    names = [ds.columns[k] for k in targets]
    boot = BootstrapConfig(args.B, levels[0], not args.unnormalized, args.seed)
    out = bootstrap_maxima(results, boot, nulls, threads=args.threads)
    crit = [out.c_a] + [critical_value(out.W, a) for a in levels[1:]]
    per_level = []
    for a, c in zip(levels, crit):
        entry = {"level": a, "c_a": float(c), "reject": bool(out.T_stat > c)}
        if command == "ci":
            entry["intervals"] = _intervals(results, names, c, out.studentize)
        per_level.append(entry)
    if args.format == "json":
        doc = {"schema_version": REPORT_SCHEMA_VERSION, **_meta(args, command, cfg),
               "B": args.B, "studentize": out.studentize, "T": float(out.T_stat),
               "targets": [{"k": k, "name": nm, "null": float(a0)}
                           for k, nm, a0 in zip(targets, names, nulls)],
               "estimates": [r.to_dict(nm) for r, nm in zip(results, names)],
               "levels": per_level}
        _emit(args, _dumps(doc))
        return EXIT_OK
    header = [""] + [f"a={a:g}" for a in levels]
    rows = [["MCB critical value"] + [float(c) for c in crit],
            ["test statistic"] + [float(out.T_stat)] * len(levels),
            ["reject"] + [e["reject"] for e in per_level]]
    if command == "ci":
        iv_header = ["level", "k", "name", "lower", "upper", "ape_lower", "ape_upper"]
        iv_rows = [[f"{e['level']:g}", iv["k"], iv["name"], iv["lower"], iv["upper"],
                    iv["ape_lower"], iv["ape_upper"]]
                   for e in per_level for iv in e["intervals"]]
    if args.format == "csv":
        text = _csv_text(["statistic"] + header[1:], rows)
        if command == "ci":
            text += "\n" + _csv_text(iv_header, iv_rows)
    else:
        text = _table_text(header, rows)
        if command == "ci":
            text += "\n" + _table_text(iv_header, iv_rows)
    _emit(args, text)
    return EXIT_OK


def _intervals(results, names, c_a: float, studentize: bool) -> list[dict]:
    out = []
    for r, nm in zip(results, names):
        half = (r.sigma_tilde if studentize else 1.0) * c_a / math.sqrt(r.G)
        lo, hi = r.alpha_tilde - half, r.alpha_tilde + half
        f = r.G / r.n
        out.append({"k": int(r.k), "name": nm, "lower": float(lo), "upper": float(hi),
                    "ape_lower": float(lo * f), "ape_upper": float(hi * f)})
    return out


def cmd_test(args) -> int:
    return _inference(args, "test")


def cmd_ci(args) -> int:
    return _inference(args, "ci")


def _sim_specs(args) -> list[tuple[str, str, DgpSpec, list[int]]]:
    dgps = [d.strip() for d in args.dgp.split(",") if d.strip()]
    for d in dgps:
        if d not in MODELS:
            raise UsageError(f"unknown DGP {d!r}; choose from {', '.join(MODELS)}")
    betas = _floats(args.beta2, "--beta2")
    sets = [int(v) for v in _floats(args.sets, "--sets")]
    if not betas or not sets or any(m < 1 for m in sets):
        raise UsageError("--beta2 and --sets need positive entries")
    out = []
    for d in dgps:
        if d == "Fig1":
            spec = DgpSpec.fig1(args.seed)
            out.append((d, "A1", spec, [1]))
            continue
        for b in betas:
            for m in sets:
                spec = DgpSpec(d, args.rho, b, args.G0, args.n, args.p, args.seed)
                targets = target_set_A(m)
                if max(targets) >= spec.p:
                    raise UsageError(f"target set A{m} needs p > {max(targets)}")
                label = (f"{b:g}" if len(sets) == 1 else
                         f"A{m}" if len(betas) == 1 else f"{b:g}/A{m}")
                out.append((d, label, spec, targets))
    return out


def cmd_simulate(args) -> int:
    level = _levels(args)[0]
    cfg = _load_config(args)
    jobs = _sim_specs(args)
    if args.dry_run:
        doc = {"command": "simulate", "dry_run": True, "seed": args.seed, "reps": args.reps,
               "B": args.B, "level": level, "studentize": args.studentize,
               "runs": [{"row": d, "column": lab, "spec": _spec_dict(s), "targets": t}
                        for d, lab, s, t in jobs]}
        _emit(args, _dumps(doc))
        return EXIT_OK
    reports = []
    for d, lab, spec, targets in jobs:
        t0 = time.perf_counter()
        rep = run_coverage(spec, targets, args.reps, args.B, level, args.seed,
                           studentize=args.studentize, config=cfg, oracle_n=args.oracle_n,
                           n_jobs=args.threads)
        reports.append((d, lab, rep, time.perf_counter() - t0))
    rows_order = list(dict.fromkeys(d for d, _, _, _ in reports))
    cols_order = list(dict.fromkeys(lab for _, lab, _, _ in reports))
    cell = {(d, lab): r.coverage for d, lab, r, _ in reports}
    table = _csv_text(["DGP"] + cols_order,
                      [[d] + [repr(cell[(d, c)]) if (d, c) in cell else "" for c in cols_order]
                       for d in rows_order])
    runs = []
    for d, lab, r, elapsed in reports:
        entry = {"row": d, "column": lab, **r.to_dict()}
        entry.pop("elapsed_seconds")
        if args.timing:
            entry["elapsed_seconds"] = elapsed
        runs.append(entry)
    sidecar = {"schema_version": SIM_SCHEMA_VERSION, "command": "simulate", "seed": args.seed,
               "version": __version__, "runs": runs}
    if args.out:
        out = Path(args.out)
        out.write_text(table, encoding="utf-8")
        out.with_suffix(".json").write_text(_dumps(sidecar), encoding="utf-8")
    elif args.format == "json":
        sys.stdout.write(_dumps(sidecar))
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _spec_dict(spec: DgpSpec) -> dict:
    return {"model": spec.model, "rho": spec.toeplitz_rho, "beta2": spec.beta2, "G0": spec.G0,
            "n": spec.n, "p": spec.p, "seed": spec.seed}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "table"), default="json")
    common.add_argument("--config", help="JSON file of dotted config keys")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="config override, e.g. penalty.c=1.2 (repeatable)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", help="long-format CSV: cluster, outcome, covariates")
    data.add_argument("--cluster-col", default="cluster")
    data.add_argument("--outcome-col", default="y")
    data.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
    data.add_argument("--sparse", help="doc,col,value triplet file")
    data.add_argument("--labels", help="doc,cluster,y label file for --sparse")
    data.add_argument("--intercept", action="store_true", help="prepend a column of ones (sparse)")

    inference = argparse.ArgumentParser(add_help=False)
    inference.add_argument("--targets", help="column names or 0-based indices, comma-separated")
    inference.add_argument("--B", type=int, default=600)
    inference.add_argument("--level", default="0.05")
    inference.add_argument("--levels", help="comma-separated levels, e.g. 0.10,0.05,0.01")
    inference.add_argument("--unnormalized", action="store_true",
                           help="drop the sigma_k studentization")

    p = argparse.ArgumentParser(prog="lassoape", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lassoape {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common, data], help="lasso logit and post-lasso fit")
    ape = sub.add_parser("ape", parents=[common, data], help="debiased APE estimates")
    ape.add_argument("--targets")
    t = sub.add_parser("test", parents=[common, data, inference], help="max-statistic test")
    t.add_argument("--nulls", help="null values alpha0, aligned with --targets (default 0)")
    c = sub.add_parser("ci", parents=[common, data, inference], help="simultaneous intervals")
    c.add_argument("--nulls", help=argparse.SUPPRESS)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo coverage experiment")
    s.add_argument("--dgp", default="M1", help=f"comma-separated, from {', '.join(MODELS)}")
    s.add_argument("--beta2", default="0.5")
    s.add_argument("--sets", default="1", help="target-set sizes m for A_m, comma-separated")
    s.add_argument("--rho", type=float)
    s.add_argument("--G0", type=int, default=200)
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--p", type=int, default=300)
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--B", type=int, default=300)
    s.add_argument("--level", default="0.05")
    s.add_argument("--levels", help=argparse.SUPPRESS)
    s.add_argument("--studentize", action="store_true", help="use sigma_k-normalized intervals")
    s.add_argument("--oracle-n", type=int, default=3_000_000)
    s.add_argument("--timing", action="store_true", help="record wall-clock time in the sidecar")
    s.add_argument("--dry-run", action="store_true", help="print the resolved specs and exit")
    return p


COMMANDS = {"fit": cmd_fit, "ape": cmd_ape, "test": cmd_test, "ci": cmd_ci,
            "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LassoApeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
