"""Compiled inner loops.  Samples arrive as raw CSR arrays (indptr, indices, data)."""
import numpy as np
from numba import njit


@njit(cache=True)
def _coef(score, label, a, b, zeta, p):
    # G(w; z) = coef * x; mirrors objective.gradient_coefficients
    if label == 1:
        return 2.0 * (1.0 - p) * (score - a) - 2.0 * (1.0 + zeta) * (1.0 - p)
    return 2.0 * p * (score - b) + 2.0 * (1.0 + zeta) * p


@njit(cache=True)
def _sparse_dot(w, indices, data, lo, hi):
    s = 0.0
    for k in range(lo, hi):
        s += w[indices[k]] * data[k]
    return s


@njit(cache=True)
def _prox_inplace(w, shrink, tau):
    # same arithmetic as regularizer.prox, including np.sign's treatment of 0
    if tau > 0.0:
        for j in range(w.shape[0]):
            u = w[j] / shrink
            if u > 0.0:
                sgn = 1.0
            elif u < 0.0:
                sgn = -1.0
            else:
                sgn = 0.0
            w[j] = sgn * max(abs(u) - tau, 0.0)
    else:
        for j in range(w.shape[0]):
            w[j] = w[j] / shrink


@njit(cache=True)
def vrspam_stage(indptr, indices, data, y, w_tilde, mu_tilde, mean_pos, mean_neg,
                 p, eta, beta, l1, picks):
    """Run the m = len(picks) inner updates of one stage from w_0 = w_tilde."""
    a_t = np.dot(w_tilde, mean_pos)
    b_t = np.dot(w_tilde, mean_neg)
    zeta_t = b_t - a_t
    shrink = 1.0 + eta * beta
    tau = eta * l1 / shrink
    w = w_tilde.copy()
    d = w.shape[0]
    for t in range(picks.shape[0]):
        i = picks[t]
        lo = indptr[i]
        hi = indptr[i + 1]
        a = np.dot(w, mean_pos)
        b = np.dot(w, mean_neg)
        c_cur = _coef(_sparse_dot(w, indices, data, lo, hi), y[i], a, b, b - a, p)
        c_snap = _coef(_sparse_dot(w_tilde, indices, data, lo, hi), y[i], a_t, b_t, zeta_t, p)
        c = c_cur - c_snap
        for j in range(d):
            w[j] = w[j] - eta * mu_tilde[j]
        for k in range(lo, hi):
            w[indices[k]] -= eta * c * data[k]
        _prox_inplace(w, shrink, tau)
    return w


@njit(cache=True)
def spam_steps(indptr, indices, data, y, w, mean_pos, mean_neg, p, beta, l1, c0,
               t_start, picks):
    """Iterations t_start+1 .. t_start+len(picks) of SPAM, updating ``w`` in place.

    Step size eta_t = c0 / (1 + c0 * beta * t).
    """
    for k in range(picks.shape[0]):
        t = t_start + k + 1
        eta = c0 / (1.0 + c0 * beta * t)
        i = picks[k]
        lo = indptr[i]
        hi = indptr[i + 1]
        a = np.dot(w, mean_pos)
        b = np.dot(w, mean_neg)
        c = _coef(_sparse_dot(w, indices, data, lo, hi), y[i], a, b, b - a, p)
        for kk in range(lo, hi):
            w[indices[kk]] -= eta * c * data[kk]
        shrink = 1.0 + eta * beta
        _prox_inplace(w, shrink, eta * l1 / shrink)
    return w
