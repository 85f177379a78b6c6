"""Pure-Python coordinate kernels.

Same signatures and in-place semantics as the compiled ``_kernels`` module.
The matrix is passed as CSR triples ``(indptr, indices, data)``; ``loss_code``
is 0 for squared loss and 1 for logistic loss; the regularizer is
``l1 ||x||_1 + (l2/2) ||x||^2``.
"""

import math

import numpy as np

from .errors import ConvergenceError

SQUARED = 0
LOGISTIC = 1


def _expit(t):
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def loss_deriv(loss_code, b, z):
    if loss_code == SQUARED:
        return z - b
    return -b * _expit(-b * z)


def logistic_prox(b, sigma, z, tol=1e-12, maxiter=100):
    """Scalar logistic dual prox; see ``LogisticLoss.dual_prox``."""
    w = -b * z
    lo = (w - 1.0) / sigma
    hi = w / sigma
    t = min(max(0.0, lo), hi)
    eps4 = 4 * np.finfo(float).eps
    for _ in range(maxiter):
        p = _expit(t)
        f = t + (p - w) / sigma
        scale = max(1.0, abs(t))
        if abs(f) <= tol * scale:
            return -b * p
        if f < 0:
            lo = t
        else:
            hi = t
        if hi - lo <= eps4 * scale:
            return -b * p
        step = t - f / (1.0 + p * (1.0 - p) / sigma)
        t = 0.5 * (lo + hi) if (step <= lo or step >= hi) else step
    raise ConvergenceError("logistic dual prox did not converge")


def dual_prox(loss_code, b, sigma, z):
    if loss_code == SQUARED:
        return (z - sigma * b) / (1.0 + sigma)
    return logistic_prox(b, sigma, z)


def _prox(w, tau, l1, l2):
    if l1 > 0.0:
        w = np.sign(w) * np.maximum(np.abs(w) - tau * l1, 0.0)
    return w / (1.0 + tau * l2)


def spdc_epoch(indptr, indices, data, b, x, x_prev, x_tilde, y, v, u, idx,
               tau, sigma, theta, inv_n, loss_code, dual_free, l1, l2):
    """Run ``len(idx)`` SPDC coordinate iterations in place."""
    for k in idx:
        lo, hi = indptr[k], indptr[k + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        z = float(vals @ x_tilde[cols])
        if dual_free:
            vk = (v[k] + sigma * z) / (1.0 + sigma)
            yk = loss_deriv(loss_code, b[k], vk)
            v[k] = vk
        else:
            yk = dual_prox(loss_code, b[k], sigma, y[k] + sigma * z)
        dy = yk - y[k]
        y[k] = yk
        w = x - tau * u
        if dy != 0.0:
            w[cols] -= (tau * dy) * vals
        xn = _prox(w, tau, l1, l2)
        x_prev[:] = x
        x_tilde[:] = xn + theta * (xn - x)
        x[:] = xn
        if dy != 0.0:
            u[cols] += (dy * inv_n) * vals


def svrg_epoch(indptr, indices, data, b, x, snap_deriv, full_grad, idx,
               eta, loss_code, l1, l2):
    """Prox-SVRG inner loop around a snapshot, in place on ``x``."""
    for k in idx:
        lo, hi = indptr[k], indptr[k + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        z = float(vals @ x[cols])
        c = loss_deriv(loss_code, b[k], z) - snap_deriv[k]
        w = x - eta * full_grad
        w[cols] -= (eta * c) * vals
        x[:] = _prox(w, eta, l1, l2)


def saga_epoch(indptr, indices, data, b, x, table, avg, idx,
               eta, inv_n, loss_code, l1, l2):
    """Prox-SAGA steps, in place on ``x``, ``table`` and ``avg``."""
    for k in idx:
        lo, hi = indptr[k], indptr[k + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        z = float(vals @ x[cols])
        g = loss_deriv(loss_code, b[k], z)
        c = g - table[k]
        w = x - eta * avg
        w[cols] -= (eta * c) * vals
        x[:] = _prox(w, eta, l1, l2)
        avg[cols] += (c * inv_n) * vals
        table[k] = g
