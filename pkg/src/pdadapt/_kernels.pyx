# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate kernels. Mirrors ``pdadapt._fallback`` exactly."""

from libc.math cimport exp, fabs, fmax

import numpy as np

from .errors import ConvergenceError

DEF SQUARED = 0
DEF EPS4 = 8.881784197001252e-16  # 4 * machine epsilon


cdef inline double _expit(double t) nogil:
    cdef double e
    if t >= 0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


cdef inline double _loss_deriv(int loss_code, double b, double z) nogil:
    if loss_code == SQUARED:
        return z - b
    return -b * _expit(-b * z)


cdef int _logistic_prox(double b, double sigma, double z, double* out) nogil:
    cdef double w = -b * z
    cdef double lo = (w - 1.0) / sigma
    cdef double hi = w / sigma
    cdef double t = 0.0
    cdef double p, f, scale, step
    cdef int it
    if t < lo:
        t = lo
    if t > hi:
        t = hi
    for it in range(100):
        p = _expit(t)
        f = t + (p - w) / sigma
        scale = fmax(1.0, fabs(t))
        if fabs(f) <= 1e-12 * scale:
            out[0] = -b * p
            return 0
        if f < 0:
            lo = t
        else:
            hi = t
        if hi - lo <= EPS4 * scale:
            out[0] = -b * p
            return 0
        step = t - f / (1.0 + p * (1.0 - p) / sigma)
        if step <= lo or step >= hi:
            t = 0.5 * (lo + hi)
        else:
            t = step
    return 1


def logistic_prox(double b, double sigma, double z):
    cdef double out
    if _logistic_prox(b, sigma, z, &out):
        raise ConvergenceError("logistic dual prox did not converge")
    return out


cdef inline double _prox1(double w, double tau, double l1, double l2) nogil:
    if l1 > 0.0:
        if w > tau * l1:
            w = w - tau * l1
        elif w < -tau * l1:
            w = w + tau * l1
        else:
            w = 0.0
    return w / (1.0 + tau * l2)


def spdc_epoch(const long[::1] indptr, const long[::1] indices, const double[::1] data,
               const double[::1] b, double[::1] x, double[::1] x_prev,
               double[::1] x_tilde, double[::1] y, double[::1] v, double[::1] u,
               const long[::1] idx, double tau, double sigma, double theta,
               double inv_n, int loss_code, bint dual_free, double l1, double l2):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t m = idx.shape[0]
    cdef Py_ssize_t it, j, p
    cdef long k
    cdef double z, vk, yk, dy, xn, wj
    cdef int fail = 0
    cdef double[::1] w = np.empty(d, dtype=np.float64)
    with nogil:
        for it in range(m):
            k = idx[it]
            z = 0.0
            for p in range(indptr[k], indptr[k + 1]):
                z = z + data[p] * x_tilde[indices[p]]
            if dual_free:
                vk = (v[k] + sigma * z) / (1.0 + sigma)
                yk = _loss_deriv(loss_code, b[k], vk)
                v[k] = vk
            elif loss_code == SQUARED:
                yk = (y[k] + sigma * z - sigma * b[k]) / (1.0 + sigma)
            else:
                if _logistic_prox(b[k], sigma, y[k] + sigma * z, &yk):
                    fail = 1
                    break
            dy = yk - y[k]
            y[k] = yk
            for j in range(d):
                w[j] = x[j] - tau * u[j]
            if dy != 0.0:
                for p in range(indptr[k], indptr[k + 1]):
                    w[indices[p]] = w[indices[p]] - (tau * dy) * data[p]
            for j in range(d):
                xn = _prox1(w[j], tau, l1, l2)
                x_prev[j] = x[j]
                x_tilde[j] = xn + theta * (xn - x[j])
                x[j] = xn
            if dy != 0.0:
                for p in range(indptr[k], indptr[k + 1]):
                    u[indices[p]] = u[indices[p]] + (dy * inv_n) * data[p]
    if fail:
        raise ConvergenceError("logistic dual prox did not converge")


def svrg_epoch(const long[::1] indptr, const long[::1] indices, const double[::1] data,
               const double[::1] b, double[::1] x, const double[::1] snap_deriv,
               const double[::1] full_grad, const long[::1] idx, double eta,
               int loss_code, double l1, double l2):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t m = idx.shape[0]
    cdef Py_ssize_t it, j, p
    cdef long k
    cdef double z, c
    cdef double[::1] w = np.empty(d, dtype=np.float64)
    with nogil:
        for it in range(m):
            k = idx[it]
            z = 0.0
            for p in range(indptr[k], indptr[k + 1]):
                z = z + data[p] * x[indices[p]]
            c = _loss_deriv(loss_code, b[k], z) - snap_deriv[k]
            for j in range(d):
                w[j] = x[j] - eta * full_grad[j]
            for p in range(indptr[k], indptr[k + 1]):
                w[indices[p]] = w[indices[p]] - (eta * c) * data[p]
            for j in range(d):
                x[j] = _prox1(w[j], eta, l1, l2)


def saga_epoch(const long[::1] indptr, const long[::1] indices, const double[::1] data,
               const double[::1] b, double[::1] x, double[::1] table,
               double[::1] avg, const long[::1] idx, double eta, double inv_n,
               int loss_code, double l1, double l2):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t m = idx.shape[0]
    cdef Py_ssize_t it, j, p
    cdef long k
    cdef double z, g, c
    cdef double[::1] w = np.empty(d, dtype=np.float64)
    with nogil:
        for it in range(m):
            k = idx[it]
            z = 0.0
            for p in range(indptr[k], indptr[k + 1]):
                z = z + data[p] * x[indices[p]]
            g = _loss_deriv(loss_code, b[k], z)
            c = g - table[k]
            for j in range(d):
                w[j] = x[j] - eta * avg[j]
            for p in range(indptr[k], indptr[k + 1]):
                w[indices[p]] = w[indices[p]] - (eta * c) * data[p]
            for j in range(d):
                x[j] = _prox1(w[j], eta, l1, l2)
            for p in range(indptr[k], indptr[k + 1]):
                avg[indices[p]] = avg[indices[p]] + (c * inv_n) * data[p]
            table[k] = g
