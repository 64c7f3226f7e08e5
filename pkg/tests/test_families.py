import numpy as np
import pytest

from gammalasso.data import Dataset
from gammalasso.families import (BINOMIAL, GAUSSIAN, FitError, LinearState,
                                 deviance, gradient_curvature, irls_working,
                                 loss, null_model)
from conftest import make_gaussian

# high-precision oracle value (mpmath, 40 digits): log(1+e^35) - 35
LOSS_ETA35 = 6.3051167601469873979e-16


class TestLoss:
    def test_gaussian_perfect_fit(self):
        y = np.array([1.0, -2.0, 3.0])
        assert loss(y, y, GAUSSIAN) == 0.0

    def test_binomial_eta_zero(self):
        v = loss(np.zeros(2), np.array([1.0, 0.0]), BINOMIAL)
        assert v == pytest.approx(2 * np.log(2.0), rel=1e-14)

    def test_binomial_extreme_eta_no_overflow(self):
        v = loss(np.array([35.0]), np.array([1.0]), BINOMIAL)
        assert v == pytest.approx(LOSS_ETA35, rel=1e-12)
        assert v > 0.0

    def test_non_finite_eta_raises(self):
        with pytest.raises(FloatingPointError):
            loss(np.array([np.inf]), np.array([1.0]), GAUSSIAN)

    def test_binomial_monotone_in_eta(self):
        grid = np.linspace(-8, 8, 41)
        l1 = [loss(np.array([e]), np.array([1.0]), BINOMIAL) for e in grid]
        l0 = [loss(np.array([e]), np.array([0.0]), BINOMIAL) for e in grid]
        assert np.all(np.diff(l1) < 0)
        assert np.all(np.diff(l0) > 0)


class TestDeviance:
    def test_gaussian(self):
        y = np.array([1.0, 2.0])
        eta = np.array([0.0, 0.0])
        assert deviance(eta, y, GAUSSIAN) == pytest.approx(5.0)
        assert deviance(y, y, GAUSSIAN) == 0.0

    def test_binomial_eta_zero(self):
        v = deviance(np.zeros(2), np.array([1.0, 0.0]), BINOMIAL)
        assert v == pytest.approx(4 * np.log(2.0), rel=1e-14)

    def test_twice_loss_identity(self, rng):
        eta = rng.standard_normal(20)
        y = (rng.random(20) < 0.5).astype(float)
        assert deviance(eta, y, BINOMIAL) == pytest.approx(
            2 * loss(eta, y, BINOMIAL), rel=1e-14)


class TestGradientCurvature:
    def test_gaussian_perfect_fit_zero_gradient(self, rng):
        d, X, y, _ = make_gaussian(rng, n=40, p=3)
        state = LinearState(alpha=0.0, eta=y.copy())
        for j in range(3):
            g, h = gradient_curvature(d, j, state, GAUSSIAN)
            assert g == pytest.approx(0.0, abs=1e-12)
            assert h == pytest.approx(float(X[:, j] @ X[:, j]))

    def test_standardized_column_curvature_is_n(self, rng):
        n = 50
        x = rng.standard_normal(n)
        x = (x - x.mean()) / x.std()
        d = Dataset.from_matrix(x[:, None], rng.standard_normal(n))
        g, h = gradient_curvature(d, 0, LinearState(0.0, np.zeros(n)), GAUSSIAN)
        assert h == pytest.approx(n, rel=1e-12)

    def test_binomial_eta_zero_curvature(self, rng):
        n = 30
        X = rng.standard_normal((n, 2))
        y = (rng.random(n) < 0.5).astype(float)
        d = Dataset.from_matrix(X, y, family_hint="binomial")
        for j in range(2):
            g, h = gradient_curvature(d, j, LinearState(0.0, np.zeros(n)), BINOMIAL)
            assert h == pytest.approx(0.25 * float(X[:, j] @ X[:, j]), rel=1e-12)

    @pytest.mark.parametrize("family", [GAUSSIAN, BINOMIAL])
    def test_matches_finite_differences(self, rng, family):
        n, p = 50, 5
        X = rng.standard_normal((n, p))
        if family.is_gaussian:
            y = rng.standard_normal(n)
        else:
            y = (rng.random(n) < 0.5).astype(float)
        d = Dataset.from_matrix(X, y, family_hint=family.tag)
        beta = 0.3 * rng.standard_normal(p)
        alpha = 0.2
        h_step = 1e-5
        for j in range(p):
            def loss_at(bj):
                b = beta.copy()
                b[j] = bj
                return loss(alpha + X @ b, y, family)

            g_num = (loss_at(beta[j] + h_step) - loss_at(beta[j] - h_step)) / (2 * h_step)
            h_num = (loss_at(beta[j] + h_step) - 2 * loss_at(beta[j])
                     + loss_at(beta[j] - h_step)) / h_step**2
            state = LinearState(alpha, alpha + X @ beta)
            g, h = gradient_curvature(d, j, state, family)
            assert g == pytest.approx(g_num, rel=1e-6, abs=1e-6)
            assert h == pytest.approx(h_num, rel=1e-4, abs=1e-3)


class TestIrlsWorking:
    def test_gaussian(self):
        y = np.array([1.0, 2.0])
        v, z = irls_working(np.array([5.0, 5.0]), y, GAUSSIAN)
        np.testing.assert_array_equal(v, [1.0, 1.0])
        np.testing.assert_array_equal(z, y)

    def test_binomial_closed_form(self):
        v, z = irls_working(np.array([0.0]), np.array([1.0]), BINOMIAL)
        assert v[0] == pytest.approx(0.25)
        assert z[0] == pytest.approx(2.0)

    def test_binomial_floor(self):
        v, z = irls_working(np.array([30.0]), np.array([1.0]), BINOMIAL)
        assert v[0] >= 1e-10
        assert np.isfinite(z[0])


class TestNullModel:
    def test_gaussian_intercept_only(self, rng):
        d, X, y, _ = make_gaussian(rng, n=40, p=3)
        alpha, free_coefs, dev = null_model(d, GAUSSIAN)
        assert alpha == pytest.approx(float(np.mean(y)), rel=1e-12)
        assert free_coefs == {}
        assert dev == pytest.approx(float(np.sum((y - y.mean()) ** 2)), rel=1e-12)

    def test_binomial_intercept_is_logit_of_mean(self, rng):
        n = 40
        X = rng.standard_normal((n, 2))
        y = np.zeros(n)
        y[:10] = 1.0  # mean 0.25
        d = Dataset.from_matrix(X, y, family_hint="binomial")
        alpha, _, _ = null_model(d, BINOMIAL)
        assert alpha == pytest.approx(-1.0986122886681098, abs=1e-8)

    def test_gaussian_one_free_column_matches_normal_equations(self, rng):
        d, X, y, _ = make_gaussian(rng, n=60, p=4, free=(2,))
        alpha, free_coefs, _ = null_model(d, GAUSSIAN)
        A = np.column_stack([np.ones(60), X[:, 2]])
        ref = np.linalg.solve(A.T @ A, A.T @ y)
        assert alpha == pytest.approx(ref[0], rel=1e-10)
        assert free_coefs[2] == pytest.approx(ref[1], rel=1e-10)

    @pytest.mark.parametrize("family", [GAUSSIAN, BINOMIAL])
    def test_gradient_small_after_fit(self, rng, family):
        n = 80
        X = rng.standard_normal((n, 3))
        if family.is_gaussian:
            y = 1.0 + X[:, 1] + rng.standard_normal(n)
        else:
            q = 1 / (1 + np.exp(-(0.3 + 0.8 * X[:, 1])))
            y = (rng.random(n) < q).astype(float)
        d = Dataset.from_matrix(X, y, family_hint=family.tag, free=(1,))
        alpha, free_coefs, _ = null_model(d, family)
        eta = alpha + X[:, 1] * free_coefs[1]
        if family.is_gaussian:
            resid = y - eta
        else:
            resid = y - 1 / (1 + np.exp(-eta))
        assert abs(resid.sum()) / n < 1e-8
        assert abs(X[:, 1] @ resid) / n < 1e-8

    def test_separation_on_free_column_reported(self, rng):
        n = 30
        x = np.concatenate([np.ones(15), -np.ones(15)])
        x += 0.01 * rng.standard_normal(n)
        y = (x > 0).astype(float)
        X = np.column_stack([x, rng.standard_normal(n)])
        d = Dataset.from_matrix(X, y, family_hint="binomial", free=(0,))
        with pytest.raises(FitError):
            null_model(d, BINOMIAL)
