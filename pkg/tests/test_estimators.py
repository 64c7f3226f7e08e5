import numpy as np
import pytest
from sklearn.base import clone

from gammalasso.estimators import GammaLassoClassifier, GammaLassoRegressor


@pytest.fixture
def regression_data(rng):
    X = rng.standard_normal((200, 10))
    y = 1.0 + X @ np.concatenate([[2.0, -1.0], np.zeros(8)]) \
        + 0.5 * rng.standard_normal(200)
    return X, y


class TestRegressor:
    def test_fit_predict_recovers_signal(self, regression_data):
        X, y = regression_data
        est = GammaLassoRegressor(gamma=2.0).fit(X, y)
        assert est.coef_[0] == pytest.approx(2.0, abs=0.2)
        assert est.coef_[1] == pytest.approx(-1.0, abs=0.2)
        assert est.intercept_ == pytest.approx(1.0, abs=0.2)
        assert est.score(X, y) > 0.8
        assert est.lambda_ > 0
        assert len(est.path_.segments) == 100

    def test_cv_selection(self, regression_data):
        X, y = regression_data
        est = GammaLassoRegressor(gamma=0.0, cv=4, cv_rule="1se", seed=3).fit(X, y)
        assert est.selected_index_ == est.cv_report_.idx_1se
        assert np.count_nonzero(est.coef_) >= 2

    def test_sklearn_contract(self, regression_data):
        X, y = regression_data
        est = GammaLassoRegressor(gamma=1.5, n_segments=20, criterion="bic")
        params = est.get_params()
        assert params["gamma"] == 1.5 and params["criterion"] == "bic"
        est2 = clone(est)
        assert est2.get_params() == params
        est2.set_params(gamma=0.0)
        assert est2.gamma == 0.0
        est.fit(X, y)
        assert hasattr(est, "coef_") and est.n_features_in_ == 10

    def test_bad_criterion(self, regression_data):
        X, y = regression_data
        with pytest.raises(ValueError):
            GammaLassoRegressor(criterion="cp").fit(X, y)


class TestClassifier:
    def test_fit_predict(self, rng):
        X = rng.standard_normal((300, 6))
        q = 1 / (1 + np.exp(-(0.5 + 1.5 * X[:, 0] - X[:, 1])))
        y = (rng.random(300) < q).astype(int)
        est = GammaLassoClassifier(gamma=2.0).fit(X, y)
        assert est.coef_[0] > 0.5 and est.coef_[1] < -0.3
        acc = (est.predict(X) == y).mean()
        assert acc > 0.75
        proba = est.predict_proba(X)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)

    def test_label_mapping(self, rng):
        X = rng.standard_normal((150, 3))
        y = np.where(X[:, 0] + 0.3 * rng.standard_normal(150) > 0, "b", "a")
        est = GammaLassoClassifier(gamma=0.0).fit(X, y)
        np.testing.assert_array_equal(est.classes_, ["a", "b"])
        assert set(est.predict(X)) <= {"a", "b"}

    def test_rejects_multiclass(self, rng):
        X = rng.standard_normal((30, 2))
        y = np.arange(30) % 3
        with pytest.raises(ValueError, match="2 classes"):
            GammaLassoClassifier().fit(X, y)
