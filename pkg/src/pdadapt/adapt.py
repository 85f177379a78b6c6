"""Online tuning of the strong-convexity estimate from observed duality gaps.

Two batch heuristics are provided. The simple one multiplies ``mu_hat`` by
``sqrt(2)`` when the gap contracted faster than the rate the current
parameters promise and divides it otherwise. The robust one tunes
``Delta = delta * mu_hat**2`` directly and only moves when the observed rate
leaves a band ``[c_lo * rho, c_hi * rho]`` around the previous estimate.
Randomized solvers estimate the per-pass rate by a log-linear fit to a gap
series (``rate_regression``) and then apply the robust logic.
"""

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateGap

__all__ = [
    "AdaptState",
    "bpd_adapt_simple",
    "bpd_adapt_robust",
    "robust_update",
    "rate_regression",
    "gap_ratio",
    "initial_delta",
]

_SQRT2 = math.sqrt(2.0)


@dataclass
class AdaptState:
    """Bookkeeping for the adaptive schemes.

    Attributes
    ----------
    mu_hat : float
        Current estimate of ``mu`` (simple scheme).
    Delta : float
        Current estimate of ``delta * mu**2`` (robust scheme).
    rho : float
        Rate estimate recorded at the last tuning step.
    c_lo, c_hi : float
        Non-tuning band, ``0 < c_lo < 1 < c_hi``.
    T : int or None
        Adaptation period; ``None`` disables adaptation.
    mu_bounds, delta_bounds : tuple of float
        Clamps applied after every update.
    theta_one : bool
        Robust scheme only: report ``theta = 1`` instead of recomputing it.
    history : deque
        Recent ``(pass, P, D)`` triples.
    last_event : str or None
        ``"up"``, ``"down"``, ``"hold"`` or ``"skip"`` after each call.
    """

    mu_hat: float = 0.0
    Delta: float = 0.0
    rho: float = 1.0
    c_lo: float = 0.95
    c_hi: float = 1.5
    T: int | None = 10
    mu_bounds: tuple = (1e-12, np.inf)
    delta_bounds: tuple = (0.0, np.inf)
    theta_one: bool = False
    history: deque = field(default_factory=lambda: deque(maxlen=64))
    last_event: str | None = None

    def __post_init__(self):
        if not (0.0 < self.c_lo < 1.0 < self.c_hi):
            raise ConfigError(f"need 0 < c_lo < 1 < c_hi, got ({self.c_lo}, {self.c_hi})")
        if self.T is not None and self.T < 1:
            raise ConfigError(f"adaptation period must be >= 1, got {self.T}")
        if self.mu_hat < 0 or self.Delta < 0:
            raise ConfigError("mu_hat and Delta must be nonnegative")
        if self.rho <= 0:
            raise ConfigError("rate estimate rho must be positive")

    def record(self, pass_, primal, dual):
        self.history.append((pass_, primal, dual))

    def clamp_mu(self, mu):
        lo, hi = self.mu_bounds
        return min(max(mu, lo), hi)

    def clamp_delta(self, Delta):
        lo, hi = self.delta_bounds
        return min(max(Delta, lo), hi)

    def copy(self):
        return replace(self, history=deque(self.history, maxlen=self.history.maxlen))


def _gap(pd_pair):
    primal, dual = pd_pair
    return primal - dual


def gap_ratio(gaps):
    """Ratio of the newer gap to the older one.

    ``gaps`` is ``((P_old, D_old), (P_new, D_new))``. Raises ``DegenerateGap``
    when either gap is not strictly positive and finite.
    """
    old, new = (_gap(g) for g in gaps)
    if not (old > 0 and new > 0 and math.isfinite(old) and math.isfinite(new)):
        raise DegenerateGap(f"gaps must be positive and finite, got {old!r} and {new!r}")
    return new / old


def bpd_adapt_simple(st, sc, gaps, theta, params_fn):
    """Simple scheme: move ``mu_hat`` by a factor ``sqrt(2)``.

    Parameters
    ----------
    st : AdaptState
    sc : SpectralConstants
        Constants in the units expected by ``params_fn``.
    gaps : tuple
        ``((P, D) at t - T, (P, D) at t)``.
    theta : float
        Contraction factor of the parameters used over the last period.
    params_fn : callable
        ``params_fn(sc, mu_hat)`` returning a parameter set.

    Returns
    -------
    params, AdaptState
        New parameters and an updated copy of ``st``.

    Raises ``DegenerateGap`` when a gap is not positive; ``st`` is untouched.
    """
    ratio = gap_ratio(gaps)
    new = st.copy()
    if ratio < theta**st.T:
        new.mu_hat = new.clamp_mu(st.mu_hat * _SQRT2)
        new.last_event = "up"
    else:
        new.mu_hat = new.clamp_mu(st.mu_hat / _SQRT2)
        new.last_event = "down"
    return params_fn(sc, new.mu_hat), new


def robust_update(st, rho_hat):
    """Band logic of the robust scheme applied to a rate estimate ``rho_hat``."""
    new = st.copy()
    if rho_hat <= st.c_lo * st.rho:
        new.Delta = new.clamp_delta(2.0 * st.Delta)
        new.rho = rho_hat
        new.last_event = "up"
    elif rho_hat >= st.c_hi * st.rho:
        new.Delta = new.clamp_delta(0.5 * st.Delta)
        new.rho = rho_hat
        new.last_event = "down"
    else:
        new.last_event = "hold"
    return new


def bpd_adapt_robust(st, sc, gaps, params_fn):
    """Robust scheme: double or halve ``Delta`` outside the non-tuning band.

    ``params_fn(sc, Delta, theta_one)`` returns the parameter set for the
    combined strong convexity ``lam + Delta``. The observed rate is the gap
    ratio over one period, compared against the stored rate ``st.rho``.
    """
    new = robust_update(st, gap_ratio(gaps))
    return params_fn(sc, new.Delta, st.theta_one), new


def rate_regression(gap_series):
    """Per-step rate from a zero-intercept log-linear fit.

    ``gap_series`` holds ``T + 1`` gaps (or ``(P, D)`` pairs) observed at
    ``t = 0, ..., T``. Returns ``rho_hat`` with
    ``log rho_hat = sum_t t log(g_t / g_0) / sum_t t**2``, which is exact for
    geometric series. Raises ``DegenerateGap`` if any gap is not positive.
    """
    g = np.array([_gap(p) if np.ndim(p) else p for p in gap_series], dtype=float)
    if g.size < 2:
        raise DegenerateGap("rate regression needs at least two gaps")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise DegenerateGap("all gaps must be positive and finite")
    t = np.arange(g.size, dtype=float)
    logs = np.log(g) - np.log(g[0])
    return float(np.exp(np.dot(t, logs) / np.dot(t, t)))


def initial_delta(sc):
    """Default starting ``Delta`` (data units) when none is given: ``R**2``.

    This is the curvature a single row of largest norm contributes; on
    normalized data it is 1. Starting near ``n * lam`` instead leaves the
    robust scheme parked in its non-tuning band, because early gaps shrink
    faster than later ones and the first moves cancel out.
    """
    return float(sc.R**2)
