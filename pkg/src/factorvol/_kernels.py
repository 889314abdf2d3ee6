"""JIT-compiled inner loops.

The volatility recursions are inherently sequential in t, so they are the
one place vectorized numpy cannot help; numba compiles them to native loops.
Everything here works on plain float64 arrays and returns plain values, with
validity signaled through flags rather than exceptions.
"""
import numpy as np
from numba import njit

H_FLOOR = 1e-12
OVERFLOW = 1e200


@njit(cache=True)
def garch_recursion(omega, amat, bmat, h1, fsq):
    """Variance path: h_t = omega + amat fsq_{t-1} + bmat h_{t-1}, h_1 given."""
    T, r = fsq.shape
    h = np.empty((T, r))
    h[0] = h1
    for t in range(1, T):
        for i in range(r):
            acc = omega[i]
            for j in range(r):
                acc += amat[i, j] * fsq[t - 1, j] + bmat[i, j] * h[t - 1, j]
            h[t, i] = acc
    return h


@njit(cache=True)
def garch_objective(omega, amat, bmat, h1, fsq):
    """Gaussian quasi-likelihood objective sum(log h + fsq / h), minimized.

    Returns (objective, ok). ok is False when the path overflows.
    """
    T, r = fsq.shape
    h_prev = h1.copy()
    obj = 0.0
    for i in range(r):
        hi = h_prev[i] if h_prev[i] > H_FLOOR else H_FLOOR
        obj += np.log(hi) + fsq[0, i] / hi
    for t in range(1, T):
        h_cur = np.empty(r)
        for i in range(r):
            acc = omega[i]
            for j in range(r):
                acc += amat[i, j] * fsq[t - 1, j] + bmat[i, j] * h_prev[j]
            if acc > OVERFLOW or not np.isfinite(acc):
                return np.inf, False
            h_cur[i] = acc
            hi = acc if acc > H_FLOOR else H_FLOOR
            obj += np.log(hi) + fsq[t, i] / hi
        h_prev = h_cur
    if not np.isfinite(obj):
        return np.inf, False
    return obj, True


@njit(cache=True)
def garch_objective_grad(omega, amat, bmat, h1, minv, fsq):
    """Objective and its gradient w.r.t. (omega, amat, bmat) by adjoint recursion.

    minv must be the inverse of (I - amat - bmat), so h1 = minv omega.
    The backward pass carries lam_t = dL/dh_t = g_t + bmat' lam_{t+1} with
    g_t = (h_t - fsq_t) / h_t^2, and folds the h1 sensitivity through minv'.
    Returns (obj, g_omega, g_amat, g_bmat, ok).
    """
    T, r = fsq.shape
    g_omega = np.zeros(r)
    g_amat = np.zeros((r, r))
    g_bmat = np.zeros((r, r))
    h = np.empty((T, r))
    h[0] = h1
    obj = 0.0
    for i in range(r):
        hi = h1[i] if h1[i] > H_FLOOR else H_FLOOR
        obj += np.log(hi) + fsq[0, i] / hi
    for t in range(1, T):
        for i in range(r):
            acc = omega[i]
            for j in range(r):
                acc += amat[i, j] * fsq[t - 1, j] + bmat[i, j] * h[t - 1, j]
            if acc > OVERFLOW or not np.isfinite(acc):
                return np.inf, g_omega, g_amat, g_bmat, False
            h[t, i] = acc
            hi = acc if acc > H_FLOOR else H_FLOOR
            obj += np.log(hi) + fsq[t, i] / hi
    if not np.isfinite(obj):
        return np.inf, g_omega, g_amat, g_bmat, False

    lam = np.zeros(r)
    for t in range(T - 1, 0, -1):
        for i in range(r):
            hi = h[t, i]
            if hi > H_FLOOR:
                lam[i] += (hi - fsq[t, i]) / (hi * hi)
        for i in range(r):
            g_omega[i] += lam[i]
            for j in range(r):
                g_amat[i, j] += lam[i] * fsq[t - 1, j]
                g_bmat[i, j] += lam[i] * h[t - 1, j]
        # push the adjoint one step back: lam <- g_{t-1} + bmat' lam
        nxt = np.zeros(r)
        for j in range(r):
            acc = 0.0
            for i in range(r):
                acc += bmat[i, j] * lam[i]
            nxt[j] = acc
        lam = nxt
    for i in range(r):
        hi = h[0, i]
        if hi > H_FLOOR:
            lam[i] += (hi - fsq[0, i]) / (hi * hi)
    # h1 = minv omega depends on omega, amat, bmat; fold minv' lam in
    mt_lam = np.zeros(r)
    for j in range(r):
        acc = 0.0
        for i in range(r):
            acc += minv[i, j] * lam[i]
        mt_lam[j] = acc
    for i in range(r):
        g_omega[i] += mt_lam[i]
        for j in range(r):
            g_amat[i, j] += mt_lam[i] * h1[j]
            g_bmat[i, j] += mt_lam[i] * h1[j]
    return obj, g_omega, g_amat, g_bmat, True


@njit(cache=True)
def bekk_diag_filter(avec, bvec, x, sbar):
    """Diagonal BEKK with variance targeting: filter, likelihood, next-step cov.

    sigma_t = C + (a a') o (x_{t-1} x_{t-1}') + (b b') o sigma_{t-1},
    C = sbar o (11' - a a' - b b'), sigma_1 = sbar, o = elementwise.
    Returns (nll, sigma_next, ok); nll = sum(log det sigma_t + x_t' inv x_t).
    ok is False when some sigma_t is not positive definite.
    """
    T, s = x.shape
    cmat = np.empty((s, s))
    for i in range(s):
        for j in range(s):
            cmat[i, j] = sbar[i, j] * (1.0 - avec[i] * avec[j] - bvec[i] * bvec[j])
    sigma = sbar.copy()
    chol = np.empty((s, s))
    z = np.empty(s)
    nll = 0.0
    sigma_next = sigma
    for t in range(T + 1):
        if t > 0:
            prev = sigma
            sigma = np.empty((s, s))
            for i in range(s):
                for j in range(s):
                    sigma[i, j] = (
                        cmat[i, j]
                        + avec[i] * avec[j] * x[t - 1, i] * x[t - 1, j]
                        + bvec[i] * bvec[j] * prev[i, j]
                    )
        if t == T:
            sigma_next = sigma
            break
        # manual Cholesky so a non-PD sigma_t is a flag, not an exception
        for i in range(s):
            for j in range(i + 1):
                acc = sigma[i, j]
                for k in range(j):
                    acc -= chol[i, k] * chol[j, k]
                if i == j:
                    if acc <= 0.0 or not np.isfinite(acc):
                        return np.inf, sbar, False
                    chol[i, i] = np.sqrt(acc)
                else:
                    chol[i, j] = acc / chol[j, j]
        logdet = 0.0
        for i in range(s):
            logdet += 2.0 * np.log(chol[i, i])
        for i in range(s):
            acc = x[t, i]
            for k in range(i):
                acc -= chol[i, k] * z[k]
            z[i] = acc / chol[i, i]
        quad = 0.0
        for i in range(s):
            quad += z[i] * z[i]
        nll += logdet + quad
    if not np.isfinite(nll):
        return np.inf, sbar, False
    return nll, sigma_next, True
