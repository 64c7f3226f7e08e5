"""Numba kernels for the coordinate-descent inner loops.

Columns live in a CSC-like layout (indptr/indices/values).  The linear
predictor is kept decomposed as eta_i = alpha + m_i with m = X beta, so a
coordinate update only touches the rows of its own column; the intercept
enters gradients through the precomputed column sums vx_j.

Kernels are compiled without fastmath and without threading so repeated
runs are bit-identical.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def weighted_stats(indptr, indices, values, v):
    """Per-column weighted sums: vx_j = sum v_i x_ij, vq_j = sum v_i x_ij^2."""
    p = indptr.size - 1
    vx = np.zeros(p)
    vq = np.zeros(p)
    for j in range(p):
        s1 = 0.0
        s2 = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            w = v[indices[k]]
            x = values[k]
            s1 += w * x
            s2 += w * x * x
        vx[j] = s1
        vq[j] = s2
    return vx, vq


@njit(cache=True)
def compute_m(indptr, indices, values, beta, n):
    """m = X beta accumulated over the active columns only."""
    m = np.zeros(n)
    for j in range(beta.size):
        b = beta[j]
        if b != 0.0:
            for k in range(indptr[j], indptr[j + 1]):
                m[indices[k]] += values[k] * b
    return m


@njit(cache=True)
def all_gradients(indptr, indices, values, resid):
    """Loss gradients g_j = -sum_i x_ij resid_i for every column."""
    p = indptr.size - 1
    g = np.zeros(p)
    for j in range(p):
        acc = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            acc += values[k] * resid[indices[k]]
        g[j] = -acc
    return g


@njit(cache=True)
def cd_pass(indptr, indices, values, cols, beta, alpha_box, m, rt, v,
            vx, vh, sv, nlw, lzg, fit_intercept):
    """One coordinate-descent sweep over ``cols``.

    rt_i = v_i (z_i - m_i) is maintained incrementally; the intercept is
    re-optimized after every coefficient move (alpha += -(vx_j/sv) delta),
    which keeps the working gradient -sum x_ij rt_i + alpha vx_j exact.
    Gradients seen while a coefficient sits at zero are recorded in ``lzg``
    for the degrees-of-freedom plug-in.  Returns max_j vh_j delta_j^2.
    """
    maxdiff = 0.0
    alpha = alpha_box[0]
    for c in range(cols.size):
        j = cols[c]
        hj = vh[j]
        if hj <= 0.0:
            continue
        lo, hi = indptr[j], indptr[j + 1]
        acc = 0.0
        for k in range(lo, hi):
            acc += values[k] * rt[indices[k]]
        vg = -acc + alpha * vx[j]
        bj = beta[j]
        ghb = vg - hj * bj
        pen = nlw[j]
        if abs(ghb) < pen:
            delta = -bj
            newb = 0.0
        else:
            sgn = 1.0 if ghb > 0.0 else (-1.0 if ghb < 0.0 else 0.0)
            delta = -(vg - sgn * pen) / hj
            newb = bj + delta
        if bj == 0.0 or newb == 0.0:
            lzg[j] = ghb
        if delta != 0.0:
            beta[j] = newb
            for k in range(lo, hi):
                i = indices[k]
                xd = values[k] * delta
                m[i] += xd
                rt[i] -= v[i] * xd
            if fit_intercept:
                alpha += -(vx[j] / sv) * delta
            d = hj * delta * delta
            if d > maxdiff:
                maxdiff = d
    alpha_box[0] = alpha
    return maxdiff
