"""Primal baselines: accelerated proximal gradient, SVRG, SAGA and Katyusha.

All baselines work on ``P(x) = (1/n) sum_i phi_i(a_i^T x) + g(x)`` with the
regularizer split as ``l1 ||x||_1 + (l2/2) ||x||^2``. Passes count full data
sweeps: a full gradient costs one pass and ``n`` stochastic steps cost one
pass. Trace points carry the primal value only.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._common import Clock, check_passes, point, want_eval
from .errors import ConfigError
from .problem import primal_objective, spectral_constants
from .regularizers import soft_threshold
from .trace import Trace

__all__ = ["BaselineConfig", "run_baseline", "KINDS", "smooth_gradient"]

KINDS = ("primal-ag", "svrg", "saga", "katyusha")


@dataclass(frozen=True)
class BaselineConfig:
    """Baseline settings.

    Attributes
    ----------
    kind : str
        One of ``KINDS``.
    step : float, optional
        Step size; defaults depend on the method (see ``default_step``).
    m : int, optional
        Inner-loop length of SVRG and Katyusha; defaults to ``2 n``.
    strong_convexity : float, optional
        Strong-convexity estimate for Primal AG and Katyusha; defaults to the
        regularizer's ``lam``.
    """

    kind: str
    step: float | None = None
    m: int | None = None
    strong_convexity: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown baseline {self.kind!r}")
        if self.step is not None and not (self.step > 0 and math.isfinite(self.step)):
            raise ConfigError(f"step size must be positive, got {self.step}")
        if self.m is not None and self.m < 1:
            raise ConfigError(f"inner-loop length must be >= 1, got {self.m}")


def smooth_gradient(prob, x):
    """Gradient of the loss term ``(1/n) sum_i phi_i(a_i^T x)``."""
    return prob.rmatvec(prob.loss.deriv(prob.b, prob.matvec(x))) / prob.n


def _lmax(prob):
    # smoothness of x -> phi_i(a_i^T x), maximized over i
    return prob.R**2 / prob.loss.gamma


def default_step(kind, prob, sc):
    if kind == "svrg":
        return 0.1 / _lmax(prob)
    if kind == "saga":
        return 1.0 / (3.0 * _lmax(prob))
    if kind == "primal-ag":
        return 1.0 / (sc.L**2 / (prob.n * prob.loss.gamma) + prob.reg.lam)
    raise ConfigError(f"{kind} has no single step size")


def _record(trace, prob, t, x, clock, passes, eval_every):
    if want_eval(t, passes, eval_every):
        trace.append(point(t, (primal_objective(prob, x), None, None), clock))


def _primal_ag(prob, cfg, passes, sc, eval_every, trace, clock):
    l1, l2 = kernels.reg_weights(prob.reg)
    Ls = sc.L**2 / (prob.n * prob.loss.gamma) + l2
    eta = cfg.step or 1.0 / Ls
    mu = l2 if cfg.strong_convexity is None else cfg.strong_convexity
    x = np.zeros(prob.d)
    y = x.copy()
    t_k = 1.0
    q = mu * eta
    beta = (1.0 - math.sqrt(q)) / (1.0 + math.sqrt(q)) if q > 0 else None
    for t in range(1, passes + 1):
        clock.start()
        grad = smooth_gradient(prob, y) + l2 * y
        x_new = soft_threshold(y - eta * grad, eta * l1) if l1 > 0 else y - eta * grad
        if beta is None:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_k * t_k))
            mom = (t_k - 1.0) / t_next
            t_k = t_next
        else:
            mom = beta
        y = x_new + mom * (x_new - x)
        x = x_new
        clock.stop()
        _record(trace, prob, t, x, clock, passes, eval_every)
    return x


def _svrg(prob, cfg, passes, rng, eval_every, trace, clock):
    n = prob.n
    eta = cfg.step or default_step("svrg", prob, None)
    m = cfg.m or 2 * n
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    code = kernels.loss_code(prob.loss)
    x = np.zeros(prob.d)
    t = 0
    snap = None
    remaining = 0
    while t < passes:
        clock.start()
        if remaining == 0:
            # snapshot pass: cache phi_i' at the snapshot and the full gradient
            snap = np.asarray(prob.loss.deriv(prob.b, prob.matvec(x)), dtype=float)
            full = prob.rmatvec(snap) / n
            remaining = m
        else:
            k = min(n, remaining)
            idx = rng.integers(0, n, size=k).astype(np.int64)
            kernels.svrg_epoch(indptr, indices, data, prob.b, x, snap, full, idx, eta, code, l1, l2)
            remaining -= k
        clock.stop()
        t += 1
        _record(trace, prob, t, x, clock, passes, eval_every)
    return x


def _saga(prob, cfg, passes, rng, eval_every, trace, clock):
    n = prob.n
    eta = cfg.step or default_step("saga", prob, None)
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    code = kernels.loss_code(prob.loss)
    x = np.zeros(prob.d)
    table = avg = None
    for t in range(1, passes + 1):
        clock.start()
        if table is None:
            # first pass fills the gradient table at x0
            table = np.asarray(prob.loss.deriv(prob.b, prob.matvec(x)), dtype=float)
            avg = prob.rmatvec(table) / n
        else:
            idx = rng.integers(0, n, size=n).astype(np.int64)
            kernels.saga_epoch(indptr, indices, data, prob.b, x, table, avg, idx, eta, 1.0 / n,
                               code, l1, l2)
        clock.stop()
        _record(trace, prob, t, x, clock, passes, eval_every)
    return x


def _prox(w, step, l1, l2):
    if l1 > 0:
        w = soft_threshold(w, step * l1)
    return w / (1.0 + step * l2)


def _katyusha(prob, cfg, passes, rng, eval_every, trace, clock):
    n = prob.n
    m = cfg.m or 2 * n
    Lf = _lmax(prob)
    sigma = prob.reg.lam if cfg.strong_convexity is None else cfg.strong_convexity
    tau2 = 0.5
    tau1 = min(math.sqrt(m * sigma / (3.0 * Lf)), 0.5) if sigma > 0 else 0.5
    alpha = cfg.step or 1.0 / (3.0 * tau1 * Lf)
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    b = prob.b
    loss = prob.loss
    x_snap = np.zeros(prob.d)
    y = x_snap.copy()
    z = x_snap.copy()
    t = 0
    remaining = 0
    w_sum = 0.0
    acc = None
    j = 0
    while t < passes:
        clock.start()
        if remaining == 0:
            if acc is not None:
                x_snap = acc / w_sum
            snap = np.asarray(loss.deriv(b, prob.matvec(x_snap)), dtype=float)
            full = prob.rmatvec(snap) / n
            remaining = m
            acc = np.zeros(prob.d)
            w_sum = 0.0
            j = 0
        else:
            k = min(n, remaining)
            for i in rng.integers(0, n, size=k):
                lo, hi = indptr[i], indptr[i + 1]
                cols, vals = indices[lo:hi], data[lo:hi]
                xk = tau1 * z + tau2 * x_snap + (1.0 - tau1 - tau2) * y
                c = float(loss.deriv(b[i], vals @ xk[cols])) - snap[i]
                g = full.copy()
                g[cols] += c * vals
                z = _prox(z - alpha * g, alpha, l1, l2)
                y = _prox(xk - g / (3.0 * Lf), 1.0 / (3.0 * Lf), l1, l2)
                w = (1.0 + alpha * sigma) ** j
                acc += w * y
                w_sum += w
                j += 1
            remaining -= k
        clock.stop()
        t += 1
        _record(trace, prob, t, y, clock, passes, eval_every)
    return y


def run_baseline(prob, cfg, budget, seed=0, sc=None, eval_every=1):
    """Run a baseline for ``budget`` passes from ``x0 = 0``.

    Returns a ``Trace`` with one point per evaluated pass (plus pass 0).
    Stochastic methods draw indices from ``np.random.default_rng(seed)``.
    """
    if isinstance(cfg, str):
        cfg = BaselineConfig(cfg)
    passes = check_passes(budget)
    if eval_every < 1:
        raise ConfigError("eval_every must be >= 1")
    rng = np.random.default_rng(seed)
    trace = Trace(cfg.kind)
    clock = Clock()
    trace.append(point(0, (primal_objective(prob, np.zeros(prob.d)), None, None), clock))
    if cfg.kind == "primal-ag":
        if sc is None:
            sc = spectral_constants(prob)
        x = _primal_ag(prob, cfg, passes, sc, eval_every, trace, clock)
    elif cfg.kind == "svrg":
        x = _svrg(prob, cfg, passes, rng, eval_every, trace, clock)
    elif cfg.kind == "saga":
        x = _saga(prob, cfg, passes, rng, eval_every, trace, clock)
    else:
        x = _katyusha(prob, cfg, passes, rng, eval_every, trace, clock)
    trace.x = x
    trace.meta["config"] = cfg
    return trace
