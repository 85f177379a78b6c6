"""Randomized primal-dual coordinate solvers for regularized ERM.

Each iteration samples one example ``k`` uniformly with replacement, updates
its dual coordinate (by the dual prox, or in closed form through
``v_k = (phi_k^*)'(y_k)`` in dual-free mode), takes a proximal primal step
against the running average ``u = (1/n) sum_i y_i a_i`` and extrapolates.
One pass is ``n`` iterations. All constants are in data units.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import adapt as _adapt
from . import kernels
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
from .problem import spectral_constants
from .trace import Trace

__all__ = [
    "SpdcParams",
    "SpdcState",
    "spdc_params",
    "spdc_params_delta",
    "adf_spdc_params",
    "adf_spdc_params_delta",
    "init_spdc_state",
    "spdc_epoch",
    "spdc",
    "df_spdc",
    "ada_spdc",
    "adf_spdc",
    "spdc_potential",
    "dfspdc_potential",
    "spdc_rate_constant",
    "U_REFRESH",
]

#: passes between full recomputations of the running average ``u``
U_REFRESH = 10


@dataclass(frozen=True)
class SpdcParams:
    tau: float
    sigma: float
    theta: float
    theta_x: float
    theta_y: float
    family: str = "euclidean"

    def with_theta(self, theta):
        return replace(self, theta=theta)


def _strong(sc, n, Delta):
    if sc.R <= 0 or sc.gamma <= 0:
        raise ConfigError("need R > 0 and gamma > 0")
    if Delta < 0:
        raise ConfigError(f"Delta must be nonnegative, got {Delta}")
    s = n * sc.lam + Delta
    if not s > 0:
        raise ConfigError("n * lambda + delta * mu_hat**2 must be positive")
    return s


def spdc_params_delta(sc, n, Delta, theta_one=False):
    """Euclidean SPDC parameters for ``n * lam + Delta``, ``Delta = delta mu**2``."""
    s = _strong(sc, n, Delta)
    q = 1.0 / (4.0 * sc.R)
    tau = q * math.sqrt(sc.gamma / s)
    sigma = q * math.sqrt(s / sc.gamma)
    theta_x = (1.0 - tau * sigma * Delta / (2.0 * n * (sigma + 4.0 * sc.delta))) / (1.0 + tau * sc.lam)
    sg = sigma * sc.gamma / 2.0
    theta_y = (1.0 + (n - 1) / n * sg) / (1.0 + sg)
    theta = 1.0 if theta_one else max(theta_x, theta_y)
    return SpdcParams(tau, sigma, theta, theta_x, theta_y, "euclidean")


def spdc_params(sc, n, mu_hat=0.0, theta_one=False):
    """Euclidean SPDC parameters with ``mu`` replaced by ``mu_hat``.

    Examples
    --------
    >>> from pdadapt.problem import SpectralConstants
    >>> sc = SpectralConstants(L=1, mu=0, R=0.25, lam=1, gamma=1, delta=0)
    >>> p = spdc_params(sc, 4)
    >>> p.tau, p.sigma, p.theta_y
    (0.5, 2.0, 0.875)
    """
    return spdc_params_delta(sc, n, sc.delta * mu_hat**2, theta_one)


def adf_spdc_params_delta(sc, n, Delta, theta_one=False):
    """Dual-free SPDC parameters for ``n * lam + Delta``."""
    s = _strong(sc, n, Delta)
    q = 1.0 / (4.0 * sc.R)
    tau = q * math.sqrt(sc.gamma / s)
    sigma = q * math.sqrt(sc.gamma * s)
    theta_x = (1.0 - tau * sigma * Delta / (n * (4.0 + 2.0 * sigma))) / (1.0 + tau * sc.lam)
    theta_y = (1.0 + (n - 1) / n * sigma / 2.0) / (1.0 + sigma / 2.0)
    theta = 1.0 if theta_one else max(theta_x, theta_y)
    return SpdcParams(tau, sigma, theta, theta_x, theta_y, "dual_free")


def adf_spdc_params(sc, n, mu_hat=0.0, theta_one=False):
    """Dual-free SPDC parameters; ``tau * sigma = gamma / (16 R**2)``."""
    return adf_spdc_params_delta(sc, n, sc.delta * mu_hat**2, theta_one)


@dataclass
class SpdcState:
    x: np.ndarray
    x_prev: np.ndarray
    x_tilde: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray | None
    rng: np.random.Generator
    passes: int = 0


def init_spdc_state(prob, dual_free=False, seed=0, x0=None, y0=None):
    """Start at ``x0 = 0`` and the loss-specific dual point, ``u = A^T y0 / n``."""
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
    u = prob.rmatvec(y) / prob.n
    return SpdcState(x, x.copy(), x.copy(), y, u, v, np.random.default_rng(seed), 0)


def spdc_epoch(prob, params, state, dual_free=False, backend=None):
    """Run one pass (``n`` coordinate iterations) in place and return ``state``.

    ``backend`` selects a kernel module (see ``kernels.backend``); the
    default is the fastest available one.
    """
    if dual_free and state.v is None:
        raise ConfigError("dual-free epoch needs the auxiliary variable v")
    impl = kernels if backend is None else kernels.backend(backend)
    n = prob.n
    idx = state.rng.integers(0, n, size=n).astype(np.int64)
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    # the kernel signature always takes v; it is ignored outside dual-free mode
    v = state.v if dual_free else state.y
    impl.spdc_epoch(indptr, indices, data, prob.b, state.x, state.x_prev, state.x_tilde,
                    state.y, v, state.u, idx, params.tau, params.sigma, params.theta,
                    1.0 / n, kernels.loss_code(prob.loss), bool(dual_free), l1, l2)
    state.passes += 1
    if state.passes % U_REFRESH == 0:
        state.u[:] = prob.rmatvec(state.y) / n
    return state


def _run(prob, sc, passes, dual_free, seed, T, mu_hat, Delta0, c_lo, c_hi,
         eval_every, theta_one, window_rate, algo, backend):
    passes = check_passes(passes)
    T = check_period(T)
    if eval_every < 1:
        raise ConfigError("eval_every must be >= 1")
    if T is not None:
        require_finite_gap(prob)
    if sc is None:
        sc = spectral_constants(prob)
    n = prob.n
    fn = adf_spdc_params_delta if dual_free else spdc_params_delta
    if T is None:
        Delta = sc.delta * mu_hat**2 if Delta0 is None else Delta0
        st = None
    else:
        st = _adapt.AdaptState(Delta=Delta0, c_lo=c_lo, c_hi=c_hi, T=T,
                               mu_bounds=(1e-12, sc.R * math.sqrt(n)),
                               delta_bounds=(0.0, sc.R**2 * n / sc.gamma),
                               theta_one=theta_one)
        st.Delta = st.clamp_delta(st.Delta)
        Delta = st.Delta
        st.rho = fn(sc, n, Delta).theta ** (n * T if window_rate else n)
    params = fn(sc, n, Delta, theta_one)
    family = params.family

    state = init_spdc_state(prob, dual_free, seed)
    trace = Trace(algo)
    clock = Clock()
    estimate = (lambda: st.Delta) if st is not None else (lambda: mu_hat if Delta0 is None else Delta0)
    pdg = evaluate(prob, state.x, state.y)
    trace.append(point(0, pdg, clock, estimate()))
    window = [pdg[:2]]
    adaptations = []
    for t in range(1, passes + 1):
        clock.start()
        spdc_epoch(prob, params, state, dual_free, backend)
        clock.stop()
        fire = T is not None and t % T == 0
        if not (T is not None or want_eval(t, passes, eval_every)):
            continue
        pdg = evaluate(prob, state.x, state.y)
        event = None
        if T is not None:
            window.append(pdg[:2])
        if fire:
            try:
                rho_hat = _adapt.rate_regression(window)
                if window_rate:
                    rho_hat = rho_hat**T
                st = _adapt.robust_update(st, rho_hat)
                params = fn(sc, n, st.Delta, theta_one)
                if params.family != family:
                    raise ConfigError("switching parameter families mid-run is not supported")
                event = "adapt:" + st.last_event
            except DegenerateGap:
                event = "adapt:skip"
            adaptations.append(t)
            window = [pdg[:2]]
        if fire or want_eval(t, passes, eval_every):
            trace.append(point(t, pdg, clock, estimate(), event))
    trace.x, trace.y = state.x, state.y
    trace.meta.update(params=params, state=state, adapt_state=st, adaptations=adaptations)
    return trace


def spdc(prob, mu_hat=0.0, passes=100, seed=0, sc=None, eval_every=1, backend=None):
    """Plain SPDC with ``mu`` estimated as ``mu_hat``."""
    return _run(prob, sc, passes, False, seed, None, mu_hat, None, 0.95, 1.5,
                eval_every, False, True, "spdc", backend)


def df_spdc(prob, mu_hat=0.0, passes=100, seed=0, sc=None, eval_every=1, backend=None):
    """Dual-free SPDC with fixed parameters."""
    return _run(prob, sc, passes, True, seed, None, mu_hat, None, 0.95, 1.5,
                eval_every, False, True, "df-spdc", backend)


def ada_spdc(prob, mu0=None, T=10, dual_free=False, passes=100, seed=0, c_lo=0.95,
             c_hi=1.5, sc=None, eval_every=1, Delta0=None, theta_one=False,
             window_rate=True, backend=None):
    """Adaptive SPDC (``dual_free=False``) or ADF-SPDC (``dual_free=True``).

    Every ``T`` passes the per-pass rate is fitted to the gaps of the last
    ``T + 1`` passes by ``rate_regression``. With ``window_rate`` the fitted
    rate is raised to the power ``T`` so the robust band compares rates over a
    whole window, as in the batch scheme. ``Delta`` is then doubled, halved or
    kept and the parameters are recomputed. ``T=None`` disables adaptation.
    ``param_estimate`` reports ``Delta`` (data units).
    """
    if sc is None:
        sc = spectral_constants(prob)
    T = check_period(T)
    if T is None:
        return _run(prob, sc, passes, dual_free, seed, None, 0.0 if mu0 is None else mu0,
                    Delta0, c_lo, c_hi, eval_every, theta_one, window_rate,
                    "df-spdc" if dual_free else "spdc", backend)
    if Delta0 is None:
        Delta0 = sc.delta * mu0**2 if mu0 is not None else _adapt.initial_delta(sc)
    return _run(prob, sc, passes, dual_free, seed, T, 0.0, Delta0, c_lo, c_hi, eval_every,
                theta_one, window_rate, "adf-spdc" if dual_free else "ada-spdc", backend)


def adf_spdc(prob, **kw):
    """Adaptive dual-free SPDC; keyword arguments as ``ada_spdc``."""
    return ada_spdc(prob, dual_free=True, **kw)


def spdc_potential(prob, params, x, y, saddle):
    """``(1/(2 tau) + lam/2)||x - x*||^2 + (gamma/4)||y - y*||^2``."""
    xs, ys = saddle
    cx = 0.5 / params.tau + 0.5 * prob.reg.lam
    return float(cx * np.sum((x - xs) ** 2) + 0.25 * prob.loss.gamma * np.sum((y - ys) ** 2))


def dfspdc_potential(prob, params, x, y, saddle):
    """``(1/(2 tau) + lam/2)||x - x*||^2 + (gamma/4) sum_i D_i(y*_i, y_i)``."""
    xs, ys = saddle
    cx = 0.5 / params.tau + 0.5 * prob.reg.lam
    breg = float(np.sum(prob.loss.conj_bregman(prob.b, ys, y)))
    return float(cx * np.sum((x - xs) ** 2) + 0.25 * prob.loss.gamma * breg)


def spdc_rate_constant(prob, params, x0, y0, saddle, dual_free=False):
    """Constant ``C`` of the randomized linear-rate bounds at ``(x0, y0)``."""
    xs, ys = saddle
    cx = 0.5 / params.tau + 0.5 * prob.reg.lam
    px = cx * np.sum((x0 - xs) ** 2)
    if dual_free:
        breg = float(np.sum(prob.loss.conj_bregman(prob.b, ys, y0)))
        return float(px + (1.0 / params.sigma + 0.5) * breg)
    return float(px + (0.5 / params.sigma + 0.25 * prob.loss.gamma) * np.sum((y0 - ys) ** 2))
