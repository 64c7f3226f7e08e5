"""Seeded instance suites that exercise the theory checks in bulk.

Each suite draws random instances whose analytic preconditions hold by
construction (the results being verified are conditional), runs the
corresponding check, and tallies statuses:

  confirmed      the asserted inequality/property held
  inconclusive   a conservative bound could not be certified (never a failure)
  violation      an exact condition failed -- falsifies the implementation
  not-applicable preconditions did not hold, nothing asserted
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .oracle import (
    false_discovery_bound,
    l0_exhaustive,
    lemma1_check,
    prop1_equivalence,
    sign_recovery_check,
    theorem1_check,
    _irrep_values,
)

_SEED_TAG = 0x5E


@dataclass
class VerificationReport:
    suite: str
    instances: int
    rows: list
    counts: dict

    @property
    def passed(self) -> bool:
        return self.counts.get("violation", 0) == 0

    @property
    def inconclusive_rate(self) -> float:
        considered = self.counts.get("confirmed", 0) + self.counts.get(
            "inconclusive", 0)
        if considered == 0:
            return 0.0
        return self.counts.get("inconclusive", 0) / considered


def _standardize(X):
    X = X - X.mean(axis=0)
    scale = np.sqrt(np.mean(X * X, axis=0))
    scale[scale == 0] = 1.0
    return X / scale


def _ar1_mix(Xraw, rho):
    p = Xraw.shape[1]
    cov = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return Xraw @ np.linalg.cholesky(cov).T


def _instance_lemma1(seed, i):
    rng = np.random.default_rng([_SEED_TAG, 1, seed, i])
    n, p = 40, 6
    X = _standardize(rng.standard_normal((n, p)))
    b = rng.standard_normal(p) * (rng.random(p) < 0.5)
    y = X @ b + rng.standard_normal(n)
    S = sorted(int(v) for v in rng.choice(p, size=3, replace=False))
    j = int(rng.integers(p))
    rep = lemma1_check(X, y, S, j)
    return {
        "instance": i,
        "status": "confirmed" if rep.holds else "violation",
        "lhs": rep.cov_sq,
        "rhs": rep.mse_drop,
    }


def _draw_regression(rng, n, p, rho_max=0.5, coef_lo=1.0, coef_hi=3.0,
                     k_signal=3):
    rho = float(rng.uniform(0.0, rho_max))
    X = _standardize(_ar1_mix(rng.standard_normal((n, p)), rho))
    support = rng.choice(p, size=k_signal, replace=False)
    beta = np.zeros(p)
    beta[support] = (rng.uniform(coef_lo, coef_hi, size=k_signal)
                     * rng.choice([-1.0, 1.0], size=k_signal))
    sigma = float(rng.uniform(0.4, 1.0))
    y = X @ beta + sigma * rng.standard_normal(n)
    return X, y, sigma


def _instance_theorem1(seed, i, restarts):
    rng = np.random.default_rng([_SEED_TAG, 2, seed, i])
    n, p = 40, 10
    X, y, sigma = _draw_regression(rng, n, p)
    nu = sigma * sigma * float(rng.uniform(0.02, 0.12))
    omega = rng.uniform(0.5, 1.5, size=p)
    S = np.asarray(l0_exhaustive(X, y, nu).support, dtype=np.int64)
    Sc = np.setdiff1d(np.arange(p), S)
    w_min = float(np.min(omega[Sc])) if Sc.size else 1.0
    lam = float(rng.uniform(1.2, 2.5)) * math.sqrt(2.0 * nu) / w_min
    rep = theorem1_check(X, y, nu, lam, omega, restarts=restarts, seed=i)
    if not rep.precondition_holds:
        status = "not-applicable"
    elif rep.conclusive:
        status = "confirmed"
    else:
        status = "inconclusive"
    return {"instance": i, "status": status, "lhs": rep.lhs, "rhs": rep.rhs,
            "L": rep.L, "re": rep.re_estimate, "support": len(rep.support)}


def _instance_sign_recovery(seed, i):
    for attempt in range(20):
        rng = np.random.default_rng([_SEED_TAG, 3, seed, i, attempt])
        n, p = 50, 8
        X, y, sigma = _draw_regression(rng, n, p, rho_max=0.3,
                                       coef_lo=2.0, coef_hi=4.0)
        nu = float(rng.uniform(0.1, 0.5))
        sol = l0_exhaustive(X, y, nu)
        S = np.asarray(sol.support, dtype=np.int64)
        if S.size == 0 or S.size >= p:
            continue
        Sc = np.setdiff1d(np.arange(p), S)
        omega = np.empty(p)
        omega[S] = rng.uniform(0.3, 1.0, size=S.size)
        omega[Sc] = rng.uniform(1.0, 1.5, size=Sc.size)
        vals, cols = _irrep_values(X, S, omega[S])
        if np.any(vals >= 0.95):
            continue
        root2nu = math.sqrt(2.0 * nu)
        lam = 1.1 * float(np.max(root2nu / (omega[cols] * (1.0 - vals))))
        lam = max(lam, 1.05 * root2nu / float(np.min(omega[Sc])))
        rep = sign_recovery_check(X, y, nu, lam, omega)
        if not rep.nfp_condition_holds:
            continue
        if rep.violated:
            status = "violation"
        else:
            status = "confirmed"
        return {"instance": i, "status": status,
                "support": len(rep.support),
                "betamin": rep.betamin_condition_holds,
                "no_false_positives": rep.no_false_positives,
                "signs_match": rep.signs_match}
    return {"instance": i, "status": "not-applicable", "support": -1,
            "betamin": False, "no_false_positives": None, "signs_match": None}


def _instance_false_discovery(seed, i, restarts):
    rng = np.random.default_rng([_SEED_TAG, 4, seed, i])
    n, p = 40, 10
    X, y, sigma = _draw_regression(rng, n, p, rho_max=0.7)
    nu = sigma * sigma * float(rng.uniform(0.02, 0.12))
    omega = rng.uniform(0.5, 1.5, size=p)
    S = np.asarray(l0_exhaustive(X, y, nu).support, dtype=np.int64)
    Sc = np.setdiff1d(np.arange(p), S)
    w_min = float(np.min(omega[Sc])) if Sc.size else 1.0
    lam = float(rng.uniform(1.02, 1.3)) * math.sqrt(2.0 * nu) / w_min
    rep = false_discovery_bound(X, y, nu, lam, omega, restarts=restarts, seed=i)
    if not rep.precondition_holds:
        status = "not-applicable"
    elif rep.conclusive:
        status = "confirmed"
    else:
        status = "inconclusive"
    return {"instance": i, "status": status, "count": rep.count,
            "bound": rep.bound, "support": len(rep.support)}


def _instance_prop1(seed, i):
    rng = np.random.default_rng([_SEED_TAG, 5, seed, i])
    gamma = float(rng.uniform(0.3, 5.0))
    shape_s = float(rng.uniform(0.5, 3.0))
    phi = float(rng.uniform(0.5, 2.0))
    loss_value = float(rng.uniform(0.0, 10.0))
    beta1 = rng.standard_normal(6) * (rng.random(6) < 0.7)
    beta2 = rng.standard_normal(6)
    r1 = prop1_equivalence(beta1, gamma, shape_s, phi, loss_value)
    r2 = prop1_equivalence(beta2, gamma, shape_s, phi, loss_value)
    same_gap = abs(r1.objective_gap - r2.objective_gap) <= 1e-9 * (
        1.0 + abs(r1.objective_gap))
    ok = r1.holds and r2.holds and same_gap
    return {"instance": i, "status": "confirmed" if ok else "violation",
            "gap": r1.objective_gap, "expected": r1.expected_gap}


_SUITES = {
    "lemma1": lambda seed, i, restarts: _instance_lemma1(seed, i),
    "theorem1": _instance_theorem1,
    "sign_recovery": lambda seed, i, restarts: _instance_sign_recovery(seed, i),
    "false_discovery": _instance_false_discovery,
    "prop1": lambda seed, i, restarts: _instance_prop1(seed, i),
}

SUITE_NAMES = tuple(sorted(_SUITES))


def run_suite(name: str, instances: int, seed: int = 0, restarts: int = 40,
              n_jobs: int = 1) -> VerificationReport:
    """Run one named suite; rows come back in instance order."""
    if name not in _SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    fn = _SUITES[name]
    rows = Parallel(n_jobs=n_jobs)(
        delayed(fn)(seed, i, restarts) for i in range(instances))
    counts = {}
    for row in rows:
        counts[row["status"]] = counts.get(row["status"], 0) + 1
    return VerificationReport(suite=name, instances=instances, rows=list(rows),
                              counts=counts)
