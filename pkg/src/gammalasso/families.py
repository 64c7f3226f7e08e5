"""Gaussian and binomial likelihood machinery.

Losses are proportional to negative log likelihoods: Gaussian
``0.5*sum((y - eta)^2)``, binomial ``-sum(eta*y - log(1 + exp(eta)))`` for
y in [0,1].  Deviance is reported as ``2*loss`` throughout; for fractional
binomial responses the saturated term is omitted, so the value is the same
expression evaluated at fractional y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IRLS_WEIGHT_FLOOR = 1e-10  # keeps binomial working responses finite at extreme eta


class FitError(RuntimeError):
    """Raised when an unpenalized fit cannot be completed."""


@dataclass(frozen=True)
class Family:
    """Distribution tag plus its dispersion rule.

    Gaussian dispersion is estimated per segment as mean squared error;
    binomial dispersion is fixed at 1.
    """

    tag: str

    @property
    def is_gaussian(self) -> bool:
        return self.tag == "gaussian"

    def dispersion(self, deviance: float, n: int) -> float:
        return deviance / n if self.is_gaussian else 1.0


GAUSSIAN = Family("gaussian")
BINOMIAL = Family("binomial")


def family_from_tag(tag: str) -> Family:
    if tag not in ("gaussian", "binomial"):
        raise ValueError(f"unknown family {tag!r}")
    return GAUSSIAN if tag == "gaussian" else BINOMIAL


@dataclass
class LinearState:
    """Linear predictor eta_i = alpha + x_i'beta and its intercept."""

    alpha: float
    eta: np.ndarray


def _success_prob(eta):
    return 1.0 / (1.0 + np.exp(-eta))


def loss(eta, y, family: Family) -> float:
    """Negative log likelihood up to constants; overflow-safe for binomial."""
    eta = np.asarray(eta)
    if not np.all(np.isfinite(eta)):
        raise FloatingPointError("non-finite linear predictor")
    if family.is_gaussian:
        r = y - eta
        return 0.5 * float(r @ r)
    # log(1 + e^eta) - eta*y, split by sign so nothing cancels: the
    # well-classified tail contributes ~e^-|eta| instead of rounding to 0
    linear = np.where(eta >= 0, eta * (1.0 - y), -eta * y)
    return float(np.sum(linear + np.log1p(np.exp(-np.abs(eta)))))


def deviance(eta, y, family: Family) -> float:
    """2*loss: sum of squares (Gaussian) or binomial deviance (y in {0,1})."""
    return 2.0 * loss(eta, y, family)


def gradient_curvature(dataset, j: int, state: LinearState, family: Family):
    """Coordinate gradient and curvature of the loss at the current state.

    Gaussian: g_j = -sum x_ij (y_i - eta_i), h_j = sum x_ij^2.
    Binomial: g_j = -sum x_ij (y_i - q_i), h_j = sum x_ij^2 q_i (1 - q_i)
    with q_i the fitted success probability.
    """
    ri, vv = dataset.column(j)
    eta_j = state.eta[ri]
    y_j = dataset.y[ri]
    if family.is_gaussian:
        g = -float(vv @ (y_j - eta_j))
        h = float(vv @ vv)
    else:
        q = _success_prob(eta_j)
        g = -float(vv @ (y_j - q))
        h = float((vv * vv) @ (q * (1.0 - q)))
    return g, h


def irls_working(eta, y, family: Family):
    """Working weights v and response z for one reweighted-least-squares step."""
    if family.is_gaussian:
        return np.ones_like(y), np.asarray(y, dtype=np.float64)
    q = _success_prob(eta)
    v = np.maximum(q * (1.0 - q), IRLS_WEIGHT_FLOOR)
    z = eta + (y - q) / v
    return v, z


def null_model(dataset, family: Family, max_iter: int = 50, grad_tol: float = 1e-10):
    """Fit intercept plus free columns by unpenalized Newton minimization.

    Returns (alpha_hat, free_coefs, null_deviance) where ``free_coefs`` maps
    column index -> coefficient.  Penalized coefficients stay at zero.
    """
    free = sorted(dataset.free)
    n = dataset.n
    y = dataset.y
    Xf = np.column_stack([np.ones(n)] + [dataset.dense_column(j) for j in free])
    k = Xf.shape[1]

    theta = np.zeros(k)
    if family.is_gaussian:
        theta, *_ = np.linalg.lstsq(Xf, y, rcond=None)
        eta = Xf @ theta
    else:
        theta[0] = _start_logit(float(np.mean(y)))
        eta = Xf @ theta
        prev_loss = loss(eta, y, family)
        trace = [prev_loss]
        done = False
        for it in range(max_iter):
            q = _success_prob(eta)
            g = Xf.T @ (q - y)
            if np.max(np.abs(g)) / n <= grad_tol:
                done = True
                break
            w = np.maximum(q * (1.0 - q), IRLS_WEIGHT_FLOOR)
            H = (Xf * w[:, None]).T @ Xf
            try:
                step = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                raise FitError("singular Hessian in null model "
                               f"(free columns {free})") from None
            # step halving keeps the loss monotone
            scale = 1.0
            for _ in range(30):
                cand = theta - scale * step
                eta_c = Xf @ cand
                new_loss = loss(eta_c, y, family)
                if new_loss <= prev_loss + 1e-12 * (1.0 + abs(prev_loss)):
                    break
                scale *= 0.5
            else:
                raise FitError("null model Newton diverged; loss trace "
                               f"{[f'{v:.6g}' for v in trace]}")
            theta, eta, prev_loss = cand, eta_c, new_loss
            trace.append(prev_loss)
            if not np.all(np.isfinite(theta)) or np.max(np.abs(theta)) > 1e8:
                raise FitError("null model coefficients diverged "
                               "(perfect separation on free columns?); trace "
                               f"{[f'{v:.6g}' for v in trace]}")
        else:
            q = _success_prob(eta)
            done = np.max(np.abs(Xf.T @ (q - y))) / n <= grad_tol
        if not done:
            raise FitError("null model Newton did not converge in "
                           f"{max_iter} iterations; loss trace "
                           f"{[f'{v:.6g}' for v in trace[-8:]]}")
        if 2.0 * prev_loss < 1e-8 * n:
            raise FitError("perfect separation in the null model "
                           "(deviance ~ 0); free columns "
                           f"{free} interpolate the response")
    alpha = float(theta[0])
    free_coefs = {j: float(theta[i + 1]) for i, j in enumerate(free)}
    return alpha, free_coefs, deviance(Xf @ theta, y, family)


def _start_logit(m: float) -> float:
    m = min(max(m, 1e-12), 1.0 - 1e-12)
    return float(np.log(m / (1.0 - m)))
