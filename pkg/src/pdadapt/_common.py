"""Helpers shared by the solver drivers."""

import time

import numpy as np

from .errors import ConfigError
from .problem import dual_objective, primal_objective
from .regularizers import L2
from .trace import TracePoint

INF_PERIOD = None


class Clock:
    """Wall clock that can be paused while objectives are evaluated."""

    def __init__(self):
        self._elapsed = 0.0
        self._start = None

    def start(self):
        self._start = time.perf_counter()

    def stop(self):
        if self._start is not None:
            self._elapsed += time.perf_counter() - self._start
            self._start = None

    @property
    def elapsed(self):
        if self._start is None:
            return self._elapsed
        return self._elapsed + time.perf_counter() - self._start


def evaluate(prob, x, y=None):
    """``(P, D, gap)``; ``D`` and ``gap`` are ``None`` without a dual iterate."""
    primal = primal_objective(prob, x)
    if y is None:
        return primal, None, None
    dual = dual_objective(prob, y)
    return primal, dual, primal - dual


def point(pass_, pdg, clock, estimate=None, event=None):
    primal, dual, gap = pdg
    return TracePoint(
        pass_=int(pass_),
        primal=primal,
        dual=dual,
        gap=gap,
        elapsed_s=clock.elapsed,
        param_estimate=estimate,
        event=event,
    )


def check_period(T):
    if T is None or T == np.inf:
        return None
    if int(T) != T or T < 1:
        raise ConfigError(f"adaptation period must be a positive integer, got {T}")
    return int(T)


def require_finite_gap(prob):
    """Gap-driven adaptation needs a finite regularizer conjugate."""
    if isinstance(prob.reg, L2) and prob.reg.lam == 0:
        raise ConfigError("gap-based adaptation needs lambda > 0 for an L2 regularizer")


def check_passes(passes):
    if int(passes) != passes or passes < 0:
        raise ConfigError(f"pass budget must be a nonnegative integer, got {passes}")
    return int(passes)


def want_eval(t, passes, eval_every):
    return t == passes or t % eval_every == 0
