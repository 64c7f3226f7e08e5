"""Independent slow lasso reference for cross-checking fitted paths.

Deliberately naive: centered-data formulation, full cycling over every
coordinate on every pass (no active sets, no incremental tricks beyond the
residual update), run to an absolute tolerance.  Shares no code with the
package solver.
"""

import numpy as np


def reference_lasso_path(X, y, lambdas, tol=1e-10, max_cycles=500_000):
    """Solve 0.5*sum((y - a - X b)^2) + n*lam*sum(sd_j |b_j|) on a lambda grid.

    Returns (alphas, betas) with one row per lambda.  ``tol`` bounds the
    largest coefficient move over a full cycle, so the returned points are
    within ~tol/(1-contraction) of the exact minimizers.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    xm = X.mean(axis=0)
    Xc = X - xm
    ym = float(y.mean())
    r = (y - ym).copy()          # residual of centered response
    s = X.std(axis=0)            # population-sd penalty scales
    css = (Xc * Xc).sum(axis=0)
    beta = np.zeros(p)
    alphas, betas = [], []
    for lam in lambdas:
        thr = n * lam * s
        for _ in range(max_cycles):
            worst = 0.0
            for j in range(p):
                bj = beta[j]
                rho = float(Xc[:, j] @ r) + css[j] * bj
                bn = np.sign(rho) * max(abs(rho) - thr[j], 0.0) / css[j]
                if bn != bj:
                    r += Xc[:, j] * (bj - bn)
                    beta[j] = bn
                    d = abs(bn - bj)
                    if d > worst:
                        worst = d
            if worst < tol:
                break
        betas.append(beta.copy())
        alphas.append(ym - float(xm @ beta))
    return np.asarray(alphas), np.asarray(betas)
