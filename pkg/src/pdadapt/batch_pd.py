"""Batch primal-dual solvers for regularized ERM.

The ERM saddle function is solved in batch form ``g(x) + y^T K x - f^*(y)``
with ``K = A/n`` and ``f^*(y) = (1/n) sum_i phi_i^*(y_i)``, so the dual
iterate keeps its per-sample meaning. Parameter formulas take constants in
these batch units; ``batch_constants`` converts from data units.

Solvers
-------
``bpd``      Euclidean primal-dual iteration with extrapolation.
``df_bpd``   dual-free variant using the Bregman divergence of ``f^*``.
``ada_bpd``  Euclidean iteration with periodic re-estimation of the
             strong convexity contributed by the data.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from . import adapt as _adapt
from ._common import (
    Clock,
    check_passes,
    check_period,
    evaluate,
    point,
    require_finite_gap,
    want_eval,
)
from .errors import ConfigError, DegenerateGap
from .problem import batch_constants, duality_gap, ridge_saddle, spectral_constants
from .losses import SquaredLoss
from .regularizers import L2
from .trace import Trace

__all__ = [
    "BatchParams",
    "BatchState",
    "bpd_params",
    "bpd_params_delta",
    "dfbpd_params",
    "dfbpd_params_delta",
    "init_batch_state",
    "bpd_step",
    "dfbpd_step",
    "run_batch",
    "bpd",
    "opt_bpd",
    "df_bpd",
    "ada_bpd",
    "bpd_potential",
    "dfbpd_potential",
    "rate_constant",
    "reference_saddle",
]


@dataclass(frozen=True)
class BatchParams:
    tau: float
    sigma: float
    theta: float
    theta_x: float
    theta_y: float
    family: str = "euclidean"

    def with_theta(self, theta):
        return replace(self, theta=theta)


def _strong(sc, Delta):
    if sc.L <= 0 or sc.gamma <= 0:
        raise ConfigError("need L > 0 and gamma > 0")
    if Delta < 0:
        raise ConfigError(f"Delta must be nonnegative, got {Delta}")
    s = sc.lam + Delta
    if not s > 0:
        raise ConfigError("lambda + delta * mu_hat**2 must be positive")
    return s


def bpd_params_delta(sc, Delta, theta_one=False):
    """Euclidean parameters for combined strong convexity ``lam + Delta``.

    ``Delta`` plays the role of ``delta * mu**2``. The contraction factor
    ``theta_x`` uses ``tau*sigma*Delta / (2 sigma + delta)``, which equals the
    textbook ``delta/(delta + 2 sigma) * mu**2/L**2`` when ``tau*sigma = 1/L**2``
    and stays defined for ``delta = 0``.
    """
    s = _strong(sc, Delta)
    sigma = math.sqrt(s / sc.gamma) / sc.L
    tau = math.sqrt(sc.gamma / s) / sc.L
    theta_x = (1.0 - tau * sigma * Delta / (2.0 * sigma + sc.delta)) / (1.0 + tau * sc.lam)
    theta_y = 1.0 / (1.0 + sigma * sc.gamma / 2.0)
    theta = 1.0 if theta_one else max(theta_x, theta_y)
    return BatchParams(tau, sigma, theta, theta_x, theta_y, "euclidean")


def bpd_params(sc, mu_hat=0.0, theta_one=False):
    """Euclidean BPD parameters with ``mu`` replaced by ``mu_hat``.

    Examples
    --------
    >>> from pdadapt.problem import SpectralConstants
    >>> p = bpd_params(SpectralConstants(L=2, mu=0, R=1, lam=1, gamma=1, delta=0))
    >>> p.sigma, p.tau, p.theta
    (0.5, 0.5, 0.8)
    """
    return bpd_params_delta(sc, sc.delta * mu_hat**2, theta_one)


def dfbpd_params_delta(sc, Delta, theta_one=False):
    """Dual-free parameters for combined strong convexity ``lam + Delta``."""
    s = _strong(sc, Delta)
    sigma = math.sqrt(sc.gamma * s) / sc.L
    tau = math.sqrt(sc.gamma / s) / sc.L
    theta_x = (1.0 - tau * sigma * Delta / (4.0 + 2.0 * sigma)) / (1.0 + tau * sc.lam)
    theta_y = 1.0 / (1.0 + sigma / 2.0)
    theta = 1.0 if theta_one else max(theta_x, theta_y)
    return BatchParams(tau, sigma, theta, theta_x, theta_y, "dual_free")


def dfbpd_params(sc, mu_hat=0.0, theta_one=False):
    """Dual-free BPD parameters; note ``tau * sigma = gamma / L**2``."""
    return dfbpd_params_delta(sc, sc.delta * mu_hat**2, theta_one)


@dataclass
class BatchState:
    x: np.ndarray
    x_prev: np.ndarray
    x_tilde: np.ndarray
    y: np.ndarray
    v: np.ndarray | None = None
    t: int = 0

    def copy(self):
        return BatchState(
            self.x.copy(),
            self.x_prev.copy(),
            self.x_tilde.copy(),
            self.y.copy(),
            None if self.v is None else self.v.copy(),
            self.t,
        )


def init_batch_state(prob, dual_free=False, x0=None, y0=None):
    """Starting state: ``x0 = 0`` unless given, ``x_tilde = x_prev = x0``.

    The dual start is the loss-specific default (``0`` for squared loss,
    ``-b/2`` for logistic). In dual-free mode ``v0 = (phi^*)'(y0)``.
    """
    x = np.zeros(prob.d) if x0 is None else np.array(x0, dtype=float)
    if y0 is None:
        y, v = prob.loss.dual_free_init(prob.b)
        y = np.array(y, dtype=float)
    else:
        y = np.array(y0, dtype=float)
        prob.loss.check_domain(prob.b, y)
        v = prob.loss.conj_deriv(prob.b, y)
    if x.shape != (prob.d,) or y.shape != (prob.n,):
        raise ConfigError("initial point has the wrong shape")
    v = np.array(v, dtype=float) if dual_free else None
    return BatchState(x, x.copy(), x.copy(), y, v, 0)


def _primal_update(prob, params, state, y_new):
    tau = params.tau
    x_new = prob.reg.prox(tau, state.x - (tau / prob.n) * prob.rmatvec(y_new))
    x_tilde = x_new + params.theta * (x_new - state.x)
    return x_new, x_tilde


def bpd_step(prob, params, state):
    """One Euclidean primal-dual iteration; returns a new state."""
    s = params.sigma / prob.n
    z = state.y + s * prob.matvec(state.x_tilde)
    y_new = np.asarray(prob.loss.dual_prox(prob.b, s, z), dtype=float)
    x_new, x_tilde = _primal_update(prob, params, state, y_new)
    return BatchState(x_new, state.x.copy(), x_tilde, y_new, None, state.t + 1)


def dfbpd_step(prob, params, state):
    """One dual-free iteration.

    The dual variable is updated through ``v = (phi^*)'(y)`` in closed form,
    ``v' = (v + sigma A x_tilde)/(1 + sigma)`` and ``y' = phi'(v')``; no dual
    prox is evaluated.
    """
    if state.v is None:
        raise ConfigError("dual-free step needs the auxiliary variable v")
    sigma = params.sigma
    v_new = (state.v + sigma * prob.matvec(state.x_tilde)) / (1.0 + sigma)
    y_new = np.asarray(prob.loss.deriv(prob.b, v_new), dtype=float)
    x_new, x_tilde = _primal_update(prob, params, state, y_new)
    return BatchState(x_new, state.x.copy(), x_tilde, y_new, v_new, state.t + 1)


def _estimate(mode, n, mu_hat_b=None, Delta_b=None):
    # report in data units: mu = n * mu_K and delta*mu**2 = n * Delta_K
    if mode == "delta":
        return n * Delta_b
    return n * mu_hat_b


def run_batch(prob, params, passes, dual_free=False, state=None, eval_every=1,
              estimate=None, algo=None):
    """Run a fixed-parameter batch solver for ``passes`` iterations.

    ``estimate`` is written to the ``param_estimate`` column of every point.
    """
    passes = check_passes(passes)
    if eval_every < 1:
        raise ConfigError("eval_every must be >= 1")
    step = dfbpd_step if dual_free else bpd_step
    if state is None:
        state = init_batch_state(prob, dual_free)
    trace = Trace(algo or ("df-bpd" if dual_free else "bpd"))
    clock = Clock()
    trace.append(point(0, evaluate(prob, state.x, state.y), clock, estimate))
    for t in range(1, passes + 1):
        clock.start()
        state = step(prob, params, state)
        clock.stop()
        if want_eval(t, passes, eval_every):
            trace.append(point(t, evaluate(prob, state.x, state.y), clock, estimate))
    trace.x, trace.y = state.x, state.y
    trace.meta.update(params=params, state=state)
    return trace


def _batch_sc(prob, sc, need_mu=False):
    if sc is None:
        sc = spectral_constants(prob, need_mu=need_mu)
    return sc, batch_constants(sc, prob.n)


def bpd(prob, mu_hat=0.0, passes=100, sc=None, eval_every=1, theta_one=False):
    """Euclidean BPD with ``mu`` estimated as ``mu_hat`` (data units)."""
    sc, scb = _batch_sc(prob, sc)
    params = bpd_params(scb, mu_hat / prob.n, theta_one)
    return run_batch(prob, params, passes, eval_every=eval_every, estimate=mu_hat, algo="bpd")


def opt_bpd(prob, passes=100, sc=None, eval_every=1):
    """Euclidean BPD with the smallest singular value computed from the data."""
    if sc is None or sc.mu == 0:
        sc = spectral_constants(prob, need_mu=True)
    scb = batch_constants(sc, prob.n)
    params = bpd_params(scb, scb.mu)
    return run_batch(prob, params, passes, eval_every=eval_every, estimate=sc.mu, algo="opt-bpd")


def df_bpd(prob, mu_hat=0.0, passes=100, sc=None, eval_every=1):
    """Dual-free BPD with ``mu`` estimated as ``mu_hat`` (data units)."""
    sc, scb = _batch_sc(prob, sc)
    params = dfbpd_params(scb, mu_hat / prob.n)
    return run_batch(prob, params, passes, dual_free=True, eval_every=eval_every,
                     estimate=mu_hat, algo="df-bpd")


def ada_bpd(prob, mu0=None, T=10, heuristic="robust", passes=100, c_lo=0.95, c_hi=1.5,
            sc=None, eval_every=1, Delta0=None, theta_one=False):
    """Adaptive Euclidean BPD.

    Every ``T`` iterations the duality gaps at ``t - T`` and ``t`` feed the
    selected heuristic (``"simple"`` tunes ``mu_hat``, ``"robust"`` tunes
    ``Delta = delta * mu_hat**2``) and the step sizes are recomputed.
    ``T=None`` disables adaptation, giving plain BPD.

    Parameters
    ----------
    mu0 : float, optional
        Initial ``mu_hat`` in data units (simple scheme; the robust scheme
        starts from ``delta * mu0**2`` when ``Delta0`` is not given).
    Delta0 : float, optional
        Initial ``Delta`` in data units (robust scheme).

    The ``param_estimate`` column holds ``mu_hat`` (simple) or ``Delta``
    (robust), both in data units.
    """
    passes = check_passes(passes)
    T = check_period(T)
    if heuristic not in ("simple", "robust"):
        raise ConfigError(f"unknown heuristic {heuristic!r}")
    if T is not None:
        require_finite_gap(prob)
    sc, scb = _batch_sc(prob, sc)
    n = prob.n
    # clamps in data units: mu in [1e-12, R sqrt(n)], Delta in [0, R^2 n / gamma]
    mu_bounds = (1e-12 / n, sc.R * math.sqrt(n) / n)
    delta_bounds = (0.0, sc.R**2 * n / sc.gamma / n)

    if heuristic == "simple":
        if mu0 is None:
            mu0 = math.sqrt(_adapt.initial_delta(sc) / sc.delta) if sc.delta > 0 else sc.R
        st = _adapt.AdaptState(mu_hat=mu0 / n, c_lo=c_lo, c_hi=c_hi, T=T,
                               mu_bounds=mu_bounds, delta_bounds=delta_bounds)
        st.mu_hat = st.clamp_mu(st.mu_hat)
        params = bpd_params(scb, st.mu_hat)
    else:
        if Delta0 is None:
            Delta0 = sc.delta * mu0**2 if mu0 is not None else _adapt.initial_delta(sc)
        st = _adapt.AdaptState(Delta=Delta0 / n, c_lo=c_lo, c_hi=c_hi, T=T,
                               mu_bounds=mu_bounds, delta_bounds=delta_bounds,
                               theta_one=theta_one)
        st.Delta = st.clamp_delta(st.Delta)
        params = bpd_params_delta(scb, st.Delta, theta_one)
        if T is not None:
            # first rate estimate: the rate the initial parameters promise
            st.rho = bpd_params_delta(scb, st.Delta).theta ** T

    def est():
        if heuristic == "simple":
            return _estimate("mu", n, mu_hat_b=st.mu_hat)
        return _estimate("delta", n, Delta_b=st.Delta)

    state = init_batch_state(prob)
    trace = Trace("ada-bpd")
    clock = Clock()
    pdg = evaluate(prob, state.x, state.y)
    trace.append(point(0, pdg, clock, est()))
    anchor = pdg[:2]
    adaptations = []
    for t in range(1, passes + 1):
        clock.start()
        state = bpd_step(prob, params, state)
        clock.stop()
        fire = T is not None and t % T == 0
        if not (fire or want_eval(t, passes, eval_every)):
            continue
        pdg = evaluate(prob, state.x, state.y)
        event = None
        if fire:
            gaps = (anchor, pdg[:2])
            try:
                if heuristic == "simple":
                    params, st = _adapt.bpd_adapt_simple(st, scb, gaps, params.theta, bpd_params)
                else:
                    params, st = _adapt.bpd_adapt_robust(st, scb, gaps, bpd_params_delta)
                event = "adapt:" + st.last_event
            except DegenerateGap:
                event = "adapt:skip"
            st.record(t, *pdg[:2])
            adaptations.append(t)
            anchor = pdg[:2]
        trace.append(point(t, pdg, clock, est(), event))
    trace.x, trace.y = state.x, state.y
    trace.meta.update(params=params, state=state, adapt_state=st, adaptations=adaptations)
    return trace


def bpd_potential(prob, params, state, saddle):
    """``(1/(2 tau) + lam/2)||x - x*||^2 + (gamma_K/4)||y - y*||^2``.

    ``gamma_K = gamma/n`` is the dual strong convexity of ``f^*`` in batch
    units; ``params`` must come from ``bpd_params`` on batch constants.
    """
    xs, ys = saddle
    gamma_k = prob.loss.gamma / prob.n
    cx = 0.5 / params.tau + 0.5 * prob.reg.lam
    return float(cx * np.sum((state.x - xs) ** 2) + 0.25 * gamma_k * np.sum((state.y - ys) ** 2))


def _bregman_f(prob, y_star, y):
    # Bregman divergence of f^*(y) = (1/n) sum phi_i^*(y_i)
    return float(np.mean(prob.loss.conj_bregman(prob.b, y_star, y)))


def dfbpd_potential(prob, params, state, saddle):
    """``(1/(2 tau) + lam/2)||x - x*||^2 + D(y*, y)/2`` for the dual-free solver."""
    xs, ys = saddle
    cx = 0.5 / params.tau + 0.5 * prob.reg.lam
    return float(cx * np.sum((state.x - xs) ** 2) + 0.5 * _bregman_f(prob, ys, state.y))


def rate_constant(prob, params, state0, saddle, dual_free=False):
    """Right-hand constant ``C`` of the batch linear-rate bounds at ``state0``."""
    xs, ys = saddle
    cx = 0.5 / params.tau + 0.5 * prob.reg.lam
    px = cx * np.sum((state0.x - xs) ** 2)
    if dual_free:
        return float(px + (1.0 / params.sigma + 0.5) * _bregman_f(prob, ys, state0.y))
    gamma_k = prob.loss.gamma / prob.n
    return float(px + (0.5 / params.sigma + 0.25 * gamma_k) * np.sum((state0.y - ys) ** 2))


def _newton_saddle(prob, tol=1e-14, maxiter=100):
    A = prob.A.toarray() if prob.is_sparse else prob.A
    n, d = A.shape
    lam = prob.reg.lam
    x = np.zeros(d)
    for _ in range(maxiter):
        z = A @ x
        y = prob.loss.deriv(prob.b, z)
        grad = A.T @ y / n + lam * x
        if isinstance(prob.loss, SquaredLoss):
            h = np.ones(n)
        else:
            s = 1.0 / (1.0 + np.exp(prob.b * z))
            h = s * (1.0 - s)
        H = (A.T * h) @ A / n + lam * np.eye(d)
        step = scipy.linalg.solve(H, grad, assume_a="pos")
        x = x - step
        if np.linalg.norm(step) <= tol * max(1.0, np.linalg.norm(x)):
            break
    return x, np.asarray(prob.loss.deriv(prob.b, A @ x), dtype=float)


def reference_saddle(prob, tol=1e-12, passes=20000):
    """High-accuracy saddle point ``(x*, y*, gap)`` for rate checks.

    Squared loss with L2 uses the closed form. Other smooth problems with an
    L2 regularizer use Newton's method on the primal and set
    ``y* = phi'(A x*)``. Anything else falls back to a long dual-free run.
    Callers should skip rate checks when the returned gap exceeds ``tol``.
    """
    if isinstance(prob.reg, L2) and prob.reg.lam > 0:
        if isinstance(prob.loss, SquaredLoss):
            xs, ys = ridge_saddle(prob)
        else:
            xs, ys = _newton_saddle(prob)
    else:
        sc = spectral_constants(prob)
        params = dfbpd_params(batch_constants(sc, prob.n))
        tr = run_batch(prob, params, passes, dual_free=True, eval_every=passes)
        xs, ys = tr.x, tr.y
    return xs, ys, duality_gap(prob, xs, ys)
