"""Decreasing-lambda paths of one-step weighted-L1 estimators.

Each segment re-derives coefficient weights from the previous segment's
estimates (omega_j = s_j / (1 + gamma |beta_j|) under the log penalty,
with s_j the penalty scale), then solves a single weighted-L1 problem
warm-started from the previous solution.  gamma = 0 is the plain lasso;
gamma = inf leaves a coefficient unpenalized in every segment after it
first becomes nonzero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammainc

from . import _kernels
from .data import Dataset, PenaltyScales, penalty_scales
from .families import Family, deviance, null_model
from .solver import SegmentProblem, solve_segment

log = logging.getLogger(__name__)

GAMMA_INF = math.inf

# Relative nudge applied to the top of the grid so floating-point ties at
# the exact path start cannot pull a coefficient in at segment 1.
_LAMBDA1_GUARD = 1e-10


@dataclass(frozen=True)
class PathConfig:
    """Path geometry and penalty settings."""

    gamma: float = 0.0
    n_segments: int = 100
    lambda_min_ratio: float = 0.01
    standardize: bool = True
    free: Optional[frozenset] = None      # overrides the dataset partition
    accelerate: bool = False
    thresh: Optional[float] = None        # absolute override of 1e-7 * null deviance
    fixed_weights: Optional[tuple] = None  # per-column adaptive factors, fixed over t
    kkt_tol: float = 1e-4                 # post-convergence slack target

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError("lambda_min_ratio must be in (0, 1)")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


@dataclass
class PathSegment:
    """Per-lambda solution record."""

    t: int                       # 1-based segment index
    lam: float
    alpha: float
    beta_indices: np.ndarray
    beta_values: np.ndarray
    omega: np.ndarray
    df: float
    deviance: float
    support_size: int
    converged: bool
    cd_iterations: int
    irls_iterations: int

    def beta_dense(self, p: int) -> np.ndarray:
        b = np.zeros(p)
        b[self.beta_indices] = self.beta_values
        return b


@dataclass
class Path:
    """A fitted path: config echo, grid, null fit, and per-segment records."""

    config: PathConfig
    family: Family
    n: int
    p: int
    free: tuple
    null_deviance: float
    null_alpha: float
    lambda1: float               # exact path start (before the tie guard)
    lambdas: np.ndarray
    segments: list
    scales: np.ndarray
    truncated: bool = False
    names: Optional[tuple] = None

    def segment_eta(self, dataset: Dataset, t: int) -> np.ndarray:
        """Linear predictor of segment index t (0-based) on ``dataset``."""
        seg = self.segments[t]
        beta = seg.beta_dense(self.p)
        m = _kernels.compute_m(dataset.indptr, dataset.indices, dataset.values,
                               beta, dataset.n)
        return seg.alpha + m

    def to_dict(self) -> dict:
        cfg = {
            "gamma": "inf" if math.isinf(self.config.gamma) else self.config.gamma,
            "nSegments": self.config.n_segments,
            "lambdaMinRatio": self.config.lambda_min_ratio,
            "standardize": self.config.standardize,
            "free": sorted(self.free),
            "accelerate": self.config.accelerate,
            "family": self.family.tag,
        }
        segs = []
        for s in self.segments:
            segs.append({
                "lambda": float(s.lam),
                "alpha": float(s.alpha),
                "beta": [[int(j), float(v)]
                         for j, v in zip(s.beta_indices, s.beta_values)],
                "df": float(s.df),
                "deviance": float(s.deviance),
                "support": int(s.support_size),
                "converged": bool(s.converged),
            })
        return {
            "config": cfg,
            "lambda": [float(l) for l in self.lambdas[:len(self.segments)]],
            "segments": segs,
            "nullDeviance": float(self.null_deviance),
            "truncated": bool(self.truncated),
        }


def lambda_start(dataset: Dataset, family: Family, scales: PenaltyScales,
                 weights: Optional[np.ndarray] = None) -> float:
    """Smallest lambda with an all-zero penalized solution.

    Computed as the maximum of |g_j| / (n w_j) over penalized columns, with
    gradients taken at the null model (intercept plus free columns) and w the
    first-segment effective weights (the penalty scales unless overridden).
    """
    w = scales.s if weights is None else np.asarray(weights, dtype=np.float64)
    alpha, free_coefs, _ = null_model(dataset, family)
    g = _null_gradients(dataset, family, alpha, free_coefs)
    mask = w > 0
    if not mask.any():
        raise ValueError("no penalized columns")
    lam1 = float(np.max(np.abs(g[mask]) / (dataset.n * w[mask])))
    y = dataset.y
    if lam1 <= 1e-10 * (abs(float(np.mean(y))) + float(np.std(y)) + 1.0):
        raise ValueError("response orthogonal to all penalized covariates")
    return lam1


def _null_gradients(dataset: Dataset, family: Family, alpha: float,
                    free_coefs: dict) -> np.ndarray:
    beta = np.zeros(dataset.p)
    for j, b in free_coefs.items():
        beta[j] = b
    m = _kernels.compute_m(dataset.indptr, dataset.indices, dataset.values,
                           beta, dataset.n)
    eta = alpha + m
    if family.is_gaussian:
        resid = dataset.y - eta
    else:
        resid = dataset.y - 1.0 / (1.0 + np.exp(-eta))
    return _kernels.all_gradients(dataset.indptr, dataset.indices,
                                  dataset.values, resid)


def make_grid(lambda1: float, n_segments: int, lambda_min_ratio: float) -> np.ndarray:
    """Geometric grid from lambda1 down to exactly lambda1 * lambda_min_ratio."""
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive")
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    if not 0.0 < lambda_min_ratio < 1.0:
        raise ValueError("lambda_min_ratio must be in (0, 1)")
    if n_segments == 1:
        return np.array([lambda1])
    expo = np.arange(n_segments) / (n_segments - 1)
    return lambda1 * lambda_min_ratio ** expo


def update_weights(beta_prev: np.ndarray, gamma: float,
                   scales: PenaltyScales) -> np.ndarray:
    """Log-penalty weight recursion omega_j = s_j / (1 + gamma |beta_j|).

    gamma = 0 reproduces the penalty scales (plain lasso); gamma = inf gives
    s_j while the coefficient was zero and 0 once it is nonzero.
    """
    s = scales.s
    if math.isinf(gamma):
        return np.where(beta_prev == 0.0, s, 0.0)
    return s / (1.0 + gamma * np.abs(beta_prev))


def df_estimate(lam: float, gamma: float, phi: float, last_zero_gradient,
                shape_scale, n: int, free_count: int) -> float:
    """Degrees of freedom: prior mass of each penalty below its gradient.

    Each penalized column contributes the Gamma distribution function
    Ga(|g_j| / phi; shape = n lam s_j / (gamma phi), rate = 1/gamma) with
    s_j its shape scale; the gamma -> 0 limit is the indicator
    |g_j| > n lam s_j and gamma -> inf (or shape underflow) contributes 1.
    The intercept and free columns add free_count + 1.
    """
    g = np.abs(np.asarray(last_zero_gradient, dtype=np.float64))
    s = np.asarray(shape_scale, dtype=np.float64)
    mask = (s > 0) & np.isfinite(s)
    total = float(free_count + 1)
    if not mask.any():
        return total
    gm, sm = g[mask], s[mask]
    if math.isinf(gamma):
        return total + float(mask.sum())
    if gamma == 0.0:
        return total + float(np.sum(gm > n * lam * sm))
    shape = n * lam * sm / (gamma * phi)
    x = gm / (phi * gamma)
    terms = np.where(shape > 0, gammainc(np.maximum(shape, 1e-290), x), 1.0)
    terms = np.where(shape < 1e-290, 1.0, terms)
    return total + float(np.sum(terms))


def fit_path(dataset: Dataset, family: Family, config: PathConfig,
             lambdas: Optional[np.ndarray] = None) -> Path:
    """Run the full decreasing-lambda estimation path.

    ``lambdas`` fixes the grid externally (used by cross-validation so fold
    paths align with the full-data grid); otherwise the grid starts at the
    null-model path start.
    """
    d = dataset if config.free is None else dataset.with_free(config.free)
    alpha0, free_coefs, null_dev = null_model(d, family)
    thresh = config.thresh if config.thresh is not None else \
        max(1e-7 * null_dev, 1e-300)
    scales = penalty_scales(d, config.standardize)
    s = scales.s.copy()

    fixed = None
    if config.fixed_weights is not None:
        fixed = np.asarray(config.fixed_weights, dtype=np.float64)
        if fixed.shape != (d.p,):
            raise ValueError("fixed_weights must have one entry per column")

    # Penalized columns that are constant in this dataset (possible inside a
    # CV training fold) cannot be standardized or estimated: lock them out.
    locked = d.penalized & (d.col_sd == 0.0)

    first_w = s if fixed is None else s * fixed
    g_null = _null_gradients(d, family, alpha0, free_coefs)
    mask = (first_w > 0) & ~locked
    if not mask.any():
        raise ValueError("no penalized columns")
    if lambdas is None:
        lam1 = float(np.max(np.abs(g_null[mask]) / (d.n * first_w[mask])))
        y = d.y
        if lam1 <= 1e-10 * (abs(float(np.mean(y))) + float(np.std(y)) + 1.0):
            raise ValueError("response orthogonal to all penalized covariates")
        grid = make_grid(lam1 * (1.0 + _LAMBDA1_GUARD), config.n_segments,
                         config.lambda_min_ratio)
    else:
        grid = np.asarray(lambdas, dtype=np.float64)
        lam1 = float(grid[0])

    beta = np.zeros(d.p)
    for j, b in free_coefs.items():
        beta[j] = b
    alpha = alpha0
    lzg = g_null.copy()
    free_count = len(d.free)
    shape_scale = np.where(locked, np.inf, s)

    segments = []
    truncated = False
    prev_df = 0.0
    for t, lam in enumerate(grid, start=1):
        if fixed is not None:
            omega = s * fixed
        else:
            omega = update_weights(beta, config.gamma, scales)
        if locked.any():
            omega = np.where(locked, np.inf, omega)

        problem = SegmentProblem(
            dataset=d, family=family, lam=float(lam), omega=omega,
            alpha0=alpha, beta0=beta, thresh=thresh,
            accelerate=config.accelerate, lzg0=lzg,
            kkt_tol=config.kkt_tol)
        sol = solve_segment(problem)
        if sol.diverged and not family.is_gaussian:
            log.warning("segment %d diverged (separation?); truncating path", t)
            truncated = True
            break
        alpha, beta, lzg = sol.alpha, sol.beta, sol.last_zero_gradient
        dev = deviance(sol.eta, d.y, family)
        phi = family.dispersion(dev, d.n)
        if fixed is not None:
            df = df_estimate(float(lam), 0.0, phi, lzg,
                             np.where(locked, np.inf, s * fixed), d.n,
                             free_count)
        else:
            df = df_estimate(float(lam), config.gamma, phi, lzg, shape_scale,
                             d.n, free_count)
        if df < prev_df - 1e-9:
            log.debug("df decreased at segment %d: %.4f -> %.4f", t, prev_df, df)
        prev_df = df
        nz = np.nonzero(beta)[0]
        segments.append(PathSegment(
            t=t, lam=float(lam), alpha=float(alpha),
            beta_indices=nz.copy(), beta_values=beta[nz].copy(),
            omega=omega, df=float(df), deviance=float(dev),
            support_size=int(nz.size) - _free_in(nz, d.free),
            converged=bool(sol.converged),
            cd_iterations=sol.cd_iterations,
            irls_iterations=sol.irls_iterations))

    return Path(config=config, family=family, n=d.n, p=d.p,
                free=tuple(sorted(d.free)), null_deviance=null_dev,
                null_alpha=alpha0, lambda1=lam1, lambdas=grid,
                segments=segments, scales=s, truncated=truncated,
                names=d.names)


def _free_in(indices: np.ndarray, free) -> int:
    if not free:
        return 0
    return sum(1 for j in indices if j in free)
