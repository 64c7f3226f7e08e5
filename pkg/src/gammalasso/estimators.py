"""Scikit-learn style front ends for the path fitter.

``GammaLassoRegressor`` and ``GammaLassoClassifier`` wrap path fitting plus
model selection behind the usual fit/predict surface so the solver composes
with pipelines, grid search, and the rest of the ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .families import BINOMIAL, GAUSSIAN
from .path import PathConfig, fit_path
from .selection import cross_validate, information_criteria


class _BaseGammaLasso(BaseEstimator):
    def __init__(self, gamma=0.0, n_segments=100, lambda_min_ratio=0.01,
                 standardize=True, free=None, accelerate=False,
                 criterion="aicc", cv=None, cv_rule="min", seed=0):
        self.gamma = gamma
        self.n_segments = n_segments
        self.lambda_min_ratio = lambda_min_ratio
        self.standardize = standardize
        self.free = free
        self.accelerate = accelerate
        self.criterion = criterion
        self.cv = cv
        self.cv_rule = cv_rule
        self.seed = seed

    def _fit_family(self, X, y, family):
        if self.criterion not in ("aic", "aicc", "bic"):
            raise ValueError("criterion must be one of 'aic', 'aicc', 'bic'")
        if self.cv_rule not in ("min", "1se"):
            raise ValueError("cv_rule must be 'min' or '1se'")
        dataset = Dataset.from_matrix(
            X, y, free=self.free or (), family_hint=family.tag)
        config = PathConfig(gamma=float(self.gamma),
                            n_segments=self.n_segments,
                            lambda_min_ratio=self.lambda_min_ratio,
                            standardize=self.standardize,
                            accelerate=self.accelerate)
        self.path_ = fit_path(dataset, family, config)
        self.ic_ = information_criteria(self.path_, family)
        if self.cv:
            self.cv_report_ = cross_validate(dataset, family, config,
                                             int(self.cv), seed=self.seed,
                                             prefit=self.path_)
            idx = (self.cv_report_.idx_min if self.cv_rule == "min"
                   else self.cv_report_.idx_1se)
        else:
            idx = self.ic_.selected(self.criterion)
        if idx < 0:
            raise RuntimeError("no converged segment to select")
        seg = self.path_.segments[idx]
        self.selected_index_ = idx
        self.lambda_ = seg.lam
        self.coef_ = seg.beta_dense(dataset.p)
        self.intercept_ = seg.alpha
        self.n_features_in_ = dataset.p
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_


class GammaLassoRegressor(RegressorMixin, _BaseGammaLasso):
    """Gaussian path fit with AICc/AIC/BIC or CV selection.

    Parameters mirror the path configuration: ``gamma`` sets penalty
    concavity (0 = lasso), ``cv`` switches selection from ``criterion`` to
    K-fold cross-validation under ``cv_rule``.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        return self._fit_family(X, y, GAUSSIAN)

    def predict(self, X):
        return self.decision_function(X)


class GammaLassoClassifier(ClassifierMixin, _BaseGammaLasso):
    """Binary logistic path fit with AICc/AIC/BIC or CV selection."""

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError("binary classification requires exactly 2 classes")
        self.classes_ = classes
        y01 = (y == classes[1]).astype(np.float64)
        return self._fit_family(X, y01, BINOMIAL)

    def predict_proba(self, X):
        eta = self.decision_function(X)
        q = 1.0 / (1.0 + np.exp(-eta))
        return np.column_stack([1.0 - q, q])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]
