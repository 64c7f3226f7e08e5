"""Command-line surface: fit, cv, simulate, verify, oracle.

stdout carries data only (JSON documents or CSV tables); diagnostics go to
stderr.  Exit codes: 0 success, 1 a verification suite found a true
violation, 2 input error, 3 truncated path.  Every run echoes its resolved
configuration into the output, and all randomness derives from --seed.
"""

from __future__ import annotations

import argparse
import csv as _csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .data import DataError, load_csv, load_triplets
from .families import FitError, family_from_tag
from .path import PathConfig, fit_path
from .selection import cross_validate, information_criteria
from .simulate import (ALL_SELECTORS, SimConfig, fig3_matrix, run_experiment)
from .suites import SUITE_NAMES, run_suite


def _json_safe(obj):
    """Replace non-finite floats with strings so output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_gamma(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _parse_free(text):
    if not text:
        return ()
    items = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        items.append(int(tok) if tok.lstrip("-").isdigit() else tok)
    return tuple(items)


def _add_data_flags(sp):
    sp.add_argument("--data", help="CSV file with header row")
    sp.add_argument("--response", help="response column name (CSV input)")
    sp.add_argument("--triplets", help="sparse triplet file")
    sp.add_argument("--y", help="response file, one value per line (triplet input)")
    sp.add_argument("--n", type=int, help="observation count (triplet input)")
    sp.add_argument("--p", type=int, help="covariate count (triplet input)")
    sp.add_argument("--family", default="gaussian",
                    choices=("gaussian", "binomial"))
    sp.add_argument("--free", default="",
                    help="comma list of unpenalized columns (names or indices)")


def _add_fit_flags(sp):
    _add_data_flags(sp)
    sp.add_argument("--gamma", default="0", help="penalty scale (0=lasso, 'inf' ok)")
    sp.add_argument("--nlambda", type=int, default=100)
    sp.add_argument("--lambda-min-ratio", type=float, default=0.01)
    sp.add_argument("--standardize", action=argparse.BooleanOptionalAction,
                    default=True)
    sp.add_argument("--accelerate", action=argparse.BooleanOptionalAction,
                    default=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="write output here instead of stdout")


def _load_dataset(args):
    free = _parse_free(args.free)
    if args.data:
        if not args.response:
            raise DataError("--response is required with --data")
        return load_csv(args.data, args.response, family_hint=args.family,
                        free=free)
    if args.triplets:
        if args.y is None or args.n is None or args.p is None:
            raise DataError("--triplets requires --y, --n and --p")
        idx_free = []
        for it in free:
            if not isinstance(it, int):
                raise DataError("triplet input takes --free indices, not names")
            idx_free.append(it)
        return load_triplets(args.triplets, args.n, args.p, args.y,
                             family_hint=args.family, free=idx_free)
    raise DataError("provide --data/--response or --triplets/--y/--n/--p")


def _path_config(args):
    return PathConfig(gamma=_parse_gamma(args.gamma),
                      n_segments=args.nlambda,
                      lambda_min_ratio=args.lambda_min_ratio,
                      standardize=args.standardize,
                      accelerate=args.accelerate)


def _segment_doc(seg):
    return {
        "lambda": seg.lam,
        "alpha": seg.alpha,
        "beta": [[int(j), float(v)] for j, v in zip(seg.beta_indices,
                                                    seg.beta_values)],
        "df": seg.df,
        "deviance": seg.deviance,
        "support": int(seg.support_size),
        "converged": bool(seg.converged),
    }


def _ic_doc(report):
    return {
        "aic": list(report.aic),
        "aicc": list(report.aicc),
        "bic": list(report.bic),
        "selected": {"aic": report.idx_aic, "aicc": report.idx_aicc,
                     "bic": report.idx_bic},
    }


def cmd_fit(args) -> int:
    dataset = _load_dataset(args)
    family = family_from_tag(args.family)
    config = _path_config(args)
    path = fit_path(dataset, family, config)
    doc = path.to_dict()
    doc["config"]["seed"] = args.seed
    doc["ic"] = _ic_doc(information_criteria(path, family))
    _emit(json.dumps(_json_safe(doc), indent=1) + "\n", args.out)
    return 3 if path.truncated else 0


def cmd_cv(args) -> int:
    dataset = _load_dataset(args)
    family = family_from_tag(args.family)
    config = _path_config(args)
    path = fit_path(dataset, family, config)
    report = cross_validate(dataset, family, config, args.folds,
                            seed=args.seed, n_jobs=args.threads, prefit=path)
    doc = {
        "config": {**path.to_dict()["config"], "folds": args.folds,
                   "seed": args.seed},
        "lambda": list(path.lambdas[:len(path.segments)]),
        "mean": list(report.mean),
        "se": list(report.se),
        "idxMin": report.idx_min,
        "idx1se": report.idx_1se,
        "refit": {
            "atMin": _segment_doc(path.segments[report.idx_min]),
            "at1se": _segment_doc(path.segments[report.idx_1se]),
        },
    }
    _emit(json.dumps(_json_safe(doc), indent=1) + "\n", args.out)
    return 3 if path.truncated else 0


def cmd_simulate(args) -> int:
    if args.fixture:
        if args.fixture != "fig3":
            raise DataError(f"unknown fixture {args.fixture!r}")
        X, y = fig3_matrix(seed=args.seed, n=args.n or 1000)
        buf = io.StringIO()
        w = _csv.writer(buf)
        w.writerow(["y", "x1", "x2", "x3"])
        for i in range(X.shape[0]):
            w.writerow([repr(float(y[i]))] + [repr(float(v)) for v in X[i]])
        _emit(buf.getvalue(), args.out)
        return 0

    gammas = tuple(_parse_gamma(t) for t in args.gammas.split(","))
    selectors = tuple(s.strip() for s in args.selectors.split(","))
    config = SimConfig(n=args.n or 1000, p=args.p or 1000, rho=args.rho,
                       snr=args.snr, reps=args.reps, seed=args.seed,
                       gammas=gammas, selectors=selectors, k_folds=args.folds,
                       marginal_al=args.marginal_al, n_segments=args.nlambda,
                       lambda_min_ratio=args.lambda_min_ratio)
    print(f"config: n={config.n} p={config.p} rho={config.rho} "
          f"snr={config.snr} reps={config.reps} seed={config.seed} "
          f"gammas={args.gammas} selectors={args.selectors} "
          f"folds={config.k_folds} marginalAL={config.marginal_al} "
          f"nlambda={config.n_segments} ratio={config.lambda_min_ratio}",
          file=sys.stderr)
    rows, aggregate, failures = run_experiment(config, n_jobs=args.threads)
    if failures:
        print(f"warning: {failures} replicate(s) failed and were excluded",
              file=sys.stderr)
    buf = io.StringIO()
    w = _csv.writer(buf)
    w.writerow(["rep", "gamma", "selector", "r2", "fdr", "sensitivity",
                "support", "seconds"])
    for r in rows:
        w.writerow([r["rep"], r["gamma"], r["selector"], repr(r["r2"]),
                    repr(r["fdr"]), repr(r["sensitivity"]), r["support"],
                    repr(r["seconds"])])
    _emit(buf.getvalue(), args.out)
    if args.json_out:
        doc = {
            "config": {
                "n": config.n, "p": config.p, "rho": config.rho,
                "snr": config.snr, "reps": config.reps, "seed": config.seed,
                "gammas": ["inf" if math.isinf(g) else g for g in config.gammas],
                "selectors": list(config.selectors), "folds": config.k_folds,
                "marginalAL": config.marginal_al,
                "nSegments": config.n_segments,
                "lambdaMinRatio": config.lambda_min_ratio,
            },
            "failures": failures,
            "cells": aggregate,
        }
        with open(args.json_out, "w") as fh:
            json.dump(_json_safe(doc), fh, indent=1)
            fh.write("\n")
    return 0


def cmd_verify(args) -> int:
    report = run_suite(args.suite, args.instances, seed=args.seed,
                       restarts=args.restarts, n_jobs=args.threads)
    buf = io.StringIO()
    keys = list(report.rows[0].keys()) if report.rows else ["instance", "status"]
    w = _csv.writer(buf)
    w.writerow(keys)
    for row in report.rows:
        w.writerow([_csv_cell(row.get(k)) for k in keys])
    _emit(buf.getvalue(), args.out)
    print(f"suite={report.suite} instances={report.instances} "
          f"seed={args.seed} restarts={args.restarts} "
          + " ".join(f"{k}={v}" for k, v in sorted(report.counts.items())),
          file=sys.stderr)
    return 0 if report.passed else 1


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def cmd_oracle(args) -> int:
    from .oracle import l0_exhaustive, l0_nested

    dataset = _load_dataset(args)
    X = dataset.to_matrix()
    y = dataset.y
    if args.nested:
        if args.sigma2 is None:
            raise DataError("--nested requires --sigma2")
        sol, skipped = l0_nested(X, y, args.sigma2)
        doc = {"mode": "nested", "sigma2": args.sigma2,
               "support": [int(j) for j in sol.support],
               "objective": sol.objective,
               "skippedPrefixes": skipped}
    elif args.exhaustive:
        if args.nu is None:
            raise DataError("--exhaustive requires --nu")
        sol = l0_exhaustive(X, y, args.nu)
        doc = {"mode": "exhaustive", "nu": args.nu,
               "support": [int(j) for j in sol.support],
               "objective": sol.objective}
    else:
        raise DataError("choose --nested or --exhaustive")
    doc["config"] = {"data": args.data or args.triplets,
                     "family": args.family}
    _emit(json.dumps(_json_safe(doc), indent=1) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gammalasso",
        description="Adaptively weighted L1 regression paths with model "
                    "selection and theory verification")
    import numba
    import scipy
    ap.add_argument("--version", action="version",
                    version=(f"gammalasso {__version__} "
                             f"(numpy {np.__version__}, scipy {scipy.__version__}, "
                             f"numba {numba.__version__})"))
    sub = ap.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit one path and report criteria")
    _add_fit_flags(fit)
    fit.set_defaults(fn=cmd_fit)

    cv = sub.add_parser("cv", help="cross-validated selection over a path")
    _add_fit_flags(cv)
    cv.add_argument("--folds", type=int, default=5)
    cv.add_argument("--threads", type=int, default=1)
    cv.set_defaults(fn=cmd_cv)

    sim = sub.add_parser("simulate", help="run the simulation study grid")
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--rho", type=float, default=0.5)
    sim.add_argument("--snr", type=float, default=2.0)
    sim.add_argument("--gammas", default="0,2,10")
    sim.add_argument("--selectors", default=",".join(ALL_SELECTORS))
    sim.add_argument("--folds", type=int, default=5)
    sim.add_argument("--marginal-al", action=argparse.BooleanOptionalAction,
                     default=True)
    sim.add_argument("--nlambda", type=int, default=100)
    sim.add_argument("--lambda-min-ratio", type=float, default=0.01)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--fixture", help="emit a named dataset (fig3) as CSV")
    sim.add_argument("--out", help="write CSV here instead of stdout")
    sim.add_argument("--json-out", help="write the JSON aggregate here")
    sim.set_defaults(fn=cmd_simulate)

    ver = sub.add_parser("verify", help="run a theory verification suite")
    ver.add_argument("--suite", required=True, choices=SUITE_NAMES)
    ver.add_argument("--instances", type=int, default=100)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--restarts", type=int, default=40)
    ver.add_argument("--threads", type=int, default=1)
    ver.add_argument("--out", help="write CSV here instead of stdout")
    ver.set_defaults(fn=cmd_verify)

    orc = sub.add_parser("oracle", help="L0 oracle solves on a dataset")
    _add_data_flags(orc)
    orc.add_argument("--nested", action="store_true",
                     help="prefix-support oracle")
    orc.add_argument("--exhaustive", action="store_true",
                     help="all-subset oracle (p <= 18)")
    orc.add_argument("--sigma2", type=float)
    orc.add_argument("--nu", type=float)
    orc.add_argument("--out", help="write output here instead of stdout")
    orc.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (DataError, FitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
