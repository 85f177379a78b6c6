"""Per-sample loss families and their conjugate calculus.

Every method is vectorized: ``b`` holds the per-sample parameters (labels or
regression targets) and broadcasts against the other arguments, so the same
call works for a single sample ``i`` (``b = b_i``) or for all samples at once.

Two families are provided:

``SquaredLoss``
    ``phi_i(z) = (z - b_i)**2 / 2``, conjugate ``beta**2 / 2 + b_i * beta``.
``LogisticLoss``
    ``phi_i(z) = log(1 + exp(-b_i z))`` with ``b_i`` in ``{-1, +1}``; the
    conjugate lives on ``b_i * beta`` in ``[-1, 0]``.
"""

import numpy as np
from scipy.special import expit, xlogy

from .errors import ConvergenceError, DomainError

__all__ = ["LossFamily", "SquaredLoss", "LogisticLoss", "get_loss"]


class LossFamily:
    """Contract shared by the loss families.

    Attributes
    ----------
    name : str
    gamma : float
        Each ``phi_i`` is ``1/gamma``-smooth.
    delta : float
        Each ``phi_i`` is ``delta``-strongly convex.
    """

    name = "abstract"
    gamma = 1.0
    delta = 0.0

    def value(self, b, z):
        raise NotImplementedError

    def deriv(self, b, z):
        raise NotImplementedError

    def conj(self, b, beta):
        raise NotImplementedError

    def conj_deriv(self, b, beta):
        raise NotImplementedError

    def dual_prox(self, b, sigma, z):
        """``argmin_y phi_i^*(y) + (y - z)**2 / (2 sigma)``."""
        raise NotImplementedError

    def in_domain(self, b, beta):
        raise NotImplementedError

    def check_domain(self, b, beta):
        ok = self.in_domain(b, beta)
        if not np.all(ok):
            bad = np.flatnonzero(~np.broadcast_to(ok, np.broadcast(b, beta).shape))
            raise DomainError(
                f"{self.name} conjugate evaluated outside its domain at "
                f"{bad.size} coordinate(s), first index {bad[0]}"
            )

    def conj_bregman(self, b, y, y_ref):
        """Bregman divergence of the conjugate, ``D_i(y, y_ref)``.

        ``y_ref`` must lie in the interior of the domain.
        """
        self.check_domain(b, y)
        self.check_domain(b, y_ref)
        d = self.conj(b, y) - self.conj(b, y_ref) - self.conj_deriv(b, y_ref) * (y - y_ref)
        return np.maximum(d, 0.0)

    def dual_free_init(self, b):
        """Initial ``(y0, v0)`` with ``v0 = (phi_i^*)'(y0)`` holding exactly."""
        raise NotImplementedError

    def default_dual_init(self, b):
        """Starting dual point for the Euclidean solvers."""
        return self.dual_free_init(b)[0]

    def __repr__(self):
        return f"{type(self).__name__}(gamma={self.gamma}, delta={self.delta})"


class SquaredLoss(LossFamily):
    name = "squared"
    gamma = 1.0
    delta = 1.0

    def value(self, b, z):
        return 0.5 * (np.asarray(z, dtype=float) - b) ** 2

    def deriv(self, b, z):
        return np.asarray(z, dtype=float) - b

    def in_domain(self, b, beta):
        return np.isfinite(np.asarray(beta, dtype=float)) & np.isfinite(np.asarray(b, dtype=float))

    def conj(self, b, beta):
        beta = np.asarray(beta, dtype=float)
        return 0.5 * beta * beta + b * beta

    def conj_deriv(self, b, beta):
        return np.asarray(beta, dtype=float) + b

    def dual_prox(self, b, sigma, z):
        return (np.asarray(z, dtype=float) - sigma * b) / (1.0 + sigma)

    def conj_bregman(self, b, y, y_ref):
        diff = np.asarray(y, dtype=float) - y_ref
        return 0.5 * diff * diff

    def dual_free_init(self, b):
        # y0 = 0 is a convention; any y0 works with v0 = y0 + b.
        b = np.asarray(b, dtype=float)
        y0 = np.zeros_like(b)
        return y0, y0 + b


class LogisticLoss(LossFamily):
    """Logistic loss for labels in ``{-1, +1}``.

    Parameters
    ----------
    delta : float, optional
        Local strong-convexity constant to report. The loss is not strongly
        convex globally, so the default is 0; a bound such as
        ``exp(-B) / 4`` for margins in ``[-B, B]`` may be supplied.
    """

    name = "logistic"
    gamma = 4.0

    #: Newton solve of the dual prox
    prox_tol = 1e-12
    prox_maxiter = 100

    def __init__(self, delta=0.0):
        if not 0.0 <= delta <= 1.0 / self.gamma:
            raise ValueError("logistic delta must lie in [0, 1/4]")
        self.delta = float(delta)

    def value(self, b, z):
        return np.logaddexp(0.0, -b * np.asarray(z, dtype=float))

    def deriv(self, b, z):
        return -b * expit(b * -np.asarray(z, dtype=float))

    def _margin(self, b, beta):
        # s = -b*beta in [0, 1] parametrizes the domain
        return -b * np.asarray(beta, dtype=float)

    def in_domain(self, b, beta):
        s = self._margin(b, beta)
        return (s >= 0.0) & (s <= 1.0)

    def conj(self, b, beta):
        self.check_domain(b, beta)
        beta = np.asarray(beta, dtype=float)
        s = -b * beta
        r = 1.0 + b * beta
        return xlogy(s, s) + xlogy(r, r)

    def conj_deriv(self, b, beta):
        self.check_domain(b, beta)
        beta = np.asarray(beta, dtype=float)
        s = -b * beta
        r = 1.0 + b * beta
        with np.errstate(divide="ignore"):
            return -b * (np.log(s) - np.log(r))

    def dual_prox(self, b, sigma, z):
        """Solve the logistic dual prox by safeguarded Newton on the logit.

        With ``s = -b y`` and ``t = log(s / (1 - s))`` the optimality
        condition is ``F(t) = t + (expit(t) - w) / sigma = 0`` where
        ``w = -b z``. ``F`` is increasing with ``F' >= 1`` and its root lies
        in ``[(w - 1)/sigma, w/sigma]``, which is kept as a bisection bracket.
        """
        b, z = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(z, dtype=float))
        scalar = b.ndim == 0
        b = np.atleast_1d(b)
        z = np.atleast_1d(z)
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        w = -b * z
        lo = (w - 1.0) / sigma
        hi = w / sigma
        t = np.clip(np.zeros_like(w), lo, hi)
        active = np.ones(w.shape, dtype=bool)
        for _ in range(self.prox_maxiter):
            ta = t[active]
            p = expit(ta)
            f = ta + (p - w[active]) / sigma
            done = np.abs(f) <= self.prox_tol * np.maximum(1.0, np.abs(ta))
            lo_a, hi_a = lo[active], hi[active]
            lo_a = np.where(f < 0, ta, lo_a)
            hi_a = np.where(f > 0, ta, hi_a)
            step = ta - f / (1.0 + p * (1.0 - p) / sigma)
            outside = (step <= lo_a) | (step >= hi_a)
            step = np.where(outside, 0.5 * (lo_a + hi_a), step)
            # bracket collapsed to rounding level: accept
            done |= (hi_a - lo_a) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(ta))
            t[active] = np.where(done, ta, step)
            lo[active], hi[active] = lo_a, hi_a
            idx = np.flatnonzero(active)
            active[idx[done]] = False
            if not active.any():
                break
        else:
            raise ConvergenceError(
                f"logistic dual prox: {int(active.sum())} coordinate(s) did not converge"
            )
        y = -b * expit(t)
        return y[0] if scalar else y

    def dual_free_init(self, b):
        b = np.asarray(b, dtype=float)
        return -0.5 * b, np.zeros_like(b)

    def __repr__(self):
        return f"LogisticLoss(delta={self.delta})"


def get_loss(name, delta=None):
    """Look up a loss family by name (``"squared"`` or ``"logistic"``)."""
    if name == "squared":
        if delta is not None and delta != 1.0:
            raise ValueError("squared loss has delta = 1")
        return SquaredLoss()
    if name == "logistic":
        return LogisticLoss(0.0 if delta is None else delta)
    raise ValueError(f"unknown loss {name!r}")
