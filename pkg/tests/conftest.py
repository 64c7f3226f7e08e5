import numpy as np
import pytest

from gammalasso.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_gaussian(rng, n=80, p=6, rho=0.0, coefs=None, sd_noise=1.0,
                  intercept=0.5, free=()):
    """Small Gaussian regression Dataset plus its generating pieces."""
    X = rng.standard_normal((n, p))
    if rho:
        for j in range(1, p):
            X[:, j] = rho * X[:, j - 1] + np.sqrt(1 - rho * rho) * X[:, j]
    beta = np.zeros(p)
    if coefs is None:
        coefs = {0: 2.0, 1: -1.0}
    for j, v in coefs.items():
        beta[j] = v
    y = intercept + X @ beta + sd_noise * rng.standard_normal(n)
    return Dataset.from_matrix(X, y, free=free), X, y, beta
