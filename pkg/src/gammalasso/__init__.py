"""Sparse regression via paths of adaptively weighted L1 estimators.

Fits regularization paths for Gaussian and logistic regression under a
concave (log) penalty solved through one-step weighted-L1 approximations,
selects models by AICc/AIC/BIC or cross-validation, and ships numerical
checks of the supporting L0-comparison theory.
"""

from .data import Dataset, PenaltyScales, load_csv, load_triplets, penalty_scales
from .families import Family, BINOMIAL, GAUSSIAN
from .path import Path, PathConfig, PathSegment, fit_path
from .selection import CVReport, SelectionReport, cross_validate, information_criteria
from .estimators import GammaLassoClassifier, GammaLassoRegressor

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "PenaltyScales",
    "load_csv",
    "load_triplets",
    "penalty_scales",
    "Family",
    "GAUSSIAN",
    "BINOMIAL",
    "Path",
    "PathConfig",
    "PathSegment",
    "fit_path",
    "SelectionReport",
    "CVReport",
    "information_criteria",
    "cross_validate",
    "GammaLassoRegressor",
    "GammaLassoClassifier",
    "__version__",
]
