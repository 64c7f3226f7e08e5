"""Model selection over a fitted path: information criteria and K-fold CV.

AIC/AICc/BIC operate on -2 log f with the full Gaussian normalizing
constant (plug-in variance per segment) so reported values are
interpretable, not just argmin-equivalent.  Cross-validation reuses the
full-data lambda grid in every fold so segments align for averaging;
the adaptive weights re-derive inside each fold's own path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset
from .families import Family, deviance
from .path import Path, PathConfig, fit_path

log = logging.getLogger(__name__)

_FOLD_SEED_TAG = 0xF01D


@dataclass
class SelectionReport:
    aic: np.ndarray
    aicc: np.ndarray
    bic: np.ndarray
    idx_aic: int                 # argmin segment indices (0-based), -1 if none
    idx_aicc: int
    idx_bic: int
    lambdas: np.ndarray

    def selected(self, criterion: str) -> int:
        return {"aic": self.idx_aic, "aicc": self.idx_aicc,
                "bic": self.idx_bic}[criterion]


@dataclass
class CVReport:
    k: int
    seed: int
    fold_assignment: np.ndarray   # per-observation fold id
    lambdas: np.ndarray
    fold_deviance: np.ndarray     # (k, T) per-observation OOS deviance by fold
    mean: np.ndarray              # per-segment mean out-of-sample deviance/obs
    se: np.ndarray
    valid: np.ndarray             # segments present in every fold
    idx_min: int
    idx_1se: int


def information_criteria(path: Path, family: Family) -> SelectionReport:
    """AIC, AICc and BIC per segment; argmins over converged segments only.

    AICc uses the multiplier n/(n - df - 1) and is set to +inf once
    df >= n - 1 (the correction's pole), so such segments are never chosen.
    """
    n = path.n
    T = len(path.segments)
    aic = np.full(T, np.inf)
    aicc = np.full(T, np.inf)
    bic = np.full(T, np.inf)
    conv = np.zeros(T, dtype=bool)
    for i, seg in enumerate(path.segments):
        if family.is_gaussian:
            sigma2 = max(seg.deviance / n, 1e-300)
            m2lf = n * math.log(2.0 * math.pi * sigma2) + n
        else:
            m2lf = seg.deviance
        aic[i] = m2lf + 2.0 * seg.df
        bic[i] = m2lf + math.log(n) * seg.df
        if seg.df < n - 1:
            aicc[i] = m2lf + 2.0 * seg.df * n / (n - seg.df - 1.0)
        conv[i] = seg.converged

    def _argmin(vals):
        masked = np.where(conv, vals, np.inf)
        if not np.isfinite(masked).any():
            return -1
        return int(np.argmin(masked))

    return SelectionReport(aic=aic, aicc=aicc, bic=bic,
                           idx_aic=_argmin(aic), idx_aicc=_argmin(aicc),
                           idx_bic=_argmin(bic),
                           lambdas=path.lambdas[:T].copy())


def _fold_deviance(dataset: Dataset, family: Family, config: PathConfig,
                   lambdas: np.ndarray, train_rows, test_rows) -> np.ndarray:
    """Mean per-observation OOS deviance of one fold, nan past truncation."""
    d_train = dataset.take_rows(train_rows, allow_constant=True)
    d_test = dataset.take_rows(test_rows, allow_constant=True)
    fold_path = fit_path(d_train, family, config, lambdas=lambdas)
    out = np.full(lambdas.size, np.nan)
    for t in range(len(fold_path.segments)):
        eta = fold_path.segment_eta(d_test, t)
        out[t] = deviance(eta, d_test.y, family) / d_test.n
    return out


def cross_validate(dataset: Dataset, family: Family, config: PathConfig,
                   k: int, seed: int, n_jobs: int = 1,
                   prefit: Optional[Path] = None,
                   fold_assignment=None) -> CVReport:
    """K-fold CV over the path's lambda grid.

    Folds come from a seeded shuffle (sizes differ by at most one) unless an
    explicit per-observation ``fold_assignment`` is supplied; the grid is
    fixed by the full-data fit.  idx_min minimizes the mean OOS deviance;
    idx_1se is the smallest index (largest lambda) within one standard error
    of that minimum.  Segments truncated in any fold are excluded from
    selection.  K may run up to n (leave-one-out).
    """
    n = dataset.n
    if not 2 <= k <= n:
        raise ValueError("need 2 <= K <= n folds")
    full = prefit if prefit is not None else fit_path(dataset, family, config)
    lambdas = full.lambdas

    if fold_assignment is None:
        rng = np.random.default_rng([_FOLD_SEED_TAG, seed])
        perm = rng.permutation(n)
        assignment = np.empty(n, dtype=np.int64)
        for i in range(k):
            assignment[perm[i::k]] = i
    else:
        assignment = np.asarray(fold_assignment, dtype=np.int64)
        if assignment.shape != (n,) or set(np.unique(assignment)) != set(range(k)):
            raise ValueError("fold_assignment must map every observation to 0..K-1")

    jobs = []
    allrows = np.arange(n)
    for i in range(k):
        test = allrows[assignment == i]
        train = allrows[assignment != i]
        jobs.append((train, test))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fold_deviance)(dataset, family, config, lambdas, tr, te)
        for tr, te in jobs)
    fold_dev = np.vstack(results)            # (k, T)

    present = ~np.isnan(fold_dev)
    valid = present.all(axis=0)
    # a truncated full-data path cannot be refit at later segments either
    valid[len(full.segments):] = False
    if not valid.all():
        log.warning("%d segments missing from some fold; excluded from selection",
                    int((~valid).sum()))
    if not valid.any():
        raise RuntimeError("no segment completed in every fold")
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(fold_dev, axis=0)
        se = np.nanstd(fold_dev, axis=0, ddof=1) / math.sqrt(k)

    masked = np.where(valid, mean, np.inf)
    idx_min = int(np.argmin(masked))
    cutoff = mean[idx_min] + se[idx_min]
    ok = valid & (mean <= cutoff)
    idx_1se = int(np.nonzero(ok)[0][0])
    return CVReport(k=k, seed=seed, fold_assignment=assignment,
                    lambdas=lambdas.copy(), fold_deviance=fold_dev, mean=mean,
                    se=se, valid=valid, idx_min=idx_min, idx_1se=idx_1se)
