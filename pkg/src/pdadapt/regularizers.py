"""Strongly convex regularizers ``g`` with prox maps and conjugates."""

import numpy as np

from .errors import ConfigError

__all__ = ["Regularizer", "L2", "ElasticNet", "soft_threshold"]


def soft_threshold(v, thresh):
    """``sign(v) * max(|v| - thresh, 0)``; ties ``|v| == thresh`` map to 0."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


class Regularizer:
    """Base contract. ``lam`` is the strong-convexity constant of ``g``."""

    name = "abstract"
    lam = 0.0

    def value(self, x):
        raise NotImplementedError

    def prox(self, tau, v):
        raise NotImplementedError

    def conj(self, u):
        raise NotImplementedError

    def conj_or_inf(self, u):
        """Conjugate that returns ``inf`` instead of raising when ``lam == 0``."""
        raise NotImplementedError

    def subgradient_interval(self, x):
        """Componentwise ``[lo, hi]`` bounds on the subdifferential at ``x``."""
        raise NotImplementedError


class L2(Regularizer):
    """``g(x) = (lam / 2) ||x||^2``."""

    name = "l2"

    def __init__(self, lam):
        if lam < 0:
            raise ConfigError("lambda must be nonnegative")
        self.lam = float(lam)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.lam * float(x @ x)

    def prox(self, tau, v):
        if tau <= 0:
            raise ValueError("tau must be positive")
        return np.asarray(v, dtype=float) / (1.0 + tau * self.lam)

    def conj(self, u):
        if self.lam == 0:
            raise ConfigError("conjugate of g with lambda = 0 is the indicator of {0}")
        u = np.asarray(u, dtype=float)
        return float(u @ u) / (2.0 * self.lam)

    def conj_or_inf(self, u):
        if self.lam == 0:
            return 0.0 if not np.any(u) else np.inf
        return self.conj(u)

    def subgradient_interval(self, x):
        g = self.lam * np.asarray(x, dtype=float)
        return g, g

    def __repr__(self):
        return f"L2(lam={self.lam})"


class ElasticNet(Regularizer):
    """``g(x) = lam1 ||x||_1 + (lam2 / 2) ||x||^2``; strong convexity ``lam2``."""

    name = "elastic-net"

    def __init__(self, lam1, lam2):
        if lam1 < 0 or lam2 < 0:
            raise ConfigError("elastic-net weights must be nonnegative")
        self.lam1 = float(lam1)
        self.lam2 = float(lam2)
        self.lam = self.lam2

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.lam1 * float(np.abs(x).sum()) + 0.5 * self.lam2 * float(x @ x)

    def prox(self, tau, v):
        if tau <= 0:
            raise ValueError("tau must be positive")
        return soft_threshold(v, tau * self.lam1) / (1.0 + tau * self.lam2)

    def conj(self, u):
        if self.lam2 == 0:
            raise ConfigError("conjugate of elastic net with lambda2 = 0 is an indicator")
        s = soft_threshold(u, self.lam1)
        return float(s @ s) / (2.0 * self.lam2)

    def conj_or_inf(self, u):
        if self.lam2 == 0:
            return 0.0 if np.max(np.abs(u), initial=0.0) <= self.lam1 else np.inf
        return self.conj(u)

    def subgradient_interval(self, x):
        x = np.asarray(x, dtype=float)
        base = self.lam2 * x
        sgn = np.sign(x)
        lo = np.where(x == 0, -self.lam1, self.lam1 * sgn) + base
        hi = np.where(x == 0, self.lam1, self.lam1 * sgn) + base
        return lo, hi

    def __repr__(self):
        return f"ElasticNet(lam1={self.lam1}, lam2={self.lam2})"
