"""ERM problem instances, objective evaluators and spectral constants.

The primal problem is::

    P(x) = (1/n) sum_i phi_i(a_i^T x) + g(x)

with Fenchel dual::

    D(y) = (1/n) sum_i -phi_i^*(y_i) - g^*(-(1/n) sum_i y_i a_i)

and saddle function ``L(x, y) = (1/n) sum_i (y_i a_i^T x - phi_i^*(y_i)) + g(x)``.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigError, ConvergenceError
from .losses import LossFamily, SquaredLoss
from .regularizers import L2, Regularizer

__all__ = [
    "ProblemInstance",
    "SpectralConstants",
    "primal_objective",
    "dual_objective",
    "duality_gap",
    "saddle_value",
    "spectral_constants",
    "batch_constants",
    "ridge_saddle",
    "MU_DENSE_LIMIT",
]

#: largest d for which the smallest singular value is computed
MU_DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Data matrix ``A`` (dense or CSR), targets ``b``, loss and regularizer.

    Treat instances as immutable: solvers share them freely.
    """

    A: object
    b: np.ndarray
    loss: LossFamily
    reg: Regularizer
    name: str = field(default="problem")

    def __post_init__(self):
        A = self.A
        if sp.issparse(A):
            A = sp.csr_matrix(A, dtype=float)
            A.sort_indices()
        else:
            A = np.ascontiguousarray(A, dtype=float)
            if A.ndim != 2:
                raise ConfigError("A must be a 2-d matrix")
        b = np.ascontiguousarray(self.b, dtype=float).ravel()
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise ConfigError("A must have at least one row and one column")
        if b.shape[0] != A.shape[0]:
            raise ConfigError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
        data = A.data if sp.issparse(A) else A
        if not np.all(np.isfinite(data)) or not np.all(np.isfinite(b)):
            raise ConfigError("A and b must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.A)

    @cached_property
    def row_norms(self):
        if self.is_sparse:
            return np.sqrt(np.asarray(self.A.multiply(self.A).sum(axis=1)).ravel())
        return np.linalg.norm(self.A, axis=1)

    @property
    def R(self):
        return float(self.row_norms.max())

    @cached_property
    def csr(self):
        """``(indptr, indices, data)`` view used by the coordinate kernels."""
        M = self.A if self.is_sparse else sp.csr_matrix(self.A)
        return (
            np.ascontiguousarray(M.indptr, dtype=np.int64),
            np.ascontiguousarray(M.indices, dtype=np.int64),
            np.ascontiguousarray(M.data, dtype=float),
        )

    def matvec(self, x):
        return np.asarray(self.A @ x, dtype=float).ravel()

    def rmatvec(self, y):
        return np.asarray(self.A.T @ y, dtype=float).ravel()

    def with_reg(self, reg):
        return replace(self, reg=reg)


@dataclass(frozen=True)
class SpectralConstants:
    """Problem constants entering the step-size formulas.

    ``L = ||A||``, ``mu = sqrt(lambda_min(A^T A))``, ``R = max_i ||a_i||``,
    ``lam`` the strong convexity of ``g``, and each loss is ``delta``-strongly
    convex and ``1/gamma``-smooth.
    """

    L: float
    mu: float
    R: float
    lam: float
    gamma: float
    delta: float

    def replace(self, **kw):
        return replace(self, **kw)

    @property
    def strong_convexity(self):
        return self.lam + self.delta * self.mu**2


def primal_objective(prob, x):
    x = np.asarray(x, dtype=float)
    z = prob.matvec(x)
    return float(np.mean(prob.loss.value(prob.b, z))) + prob.reg.value(x)


def dual_objective(prob, y):
    """Fenchel dual value; ``-inf`` when ``g^*`` is infinite at the aggregate."""
    y = np.asarray(y, dtype=float)
    prob.loss.check_domain(prob.b, y)
    u = -prob.rmatvec(y) / prob.n
    gstar = prob.reg.conj_or_inf(u)
    if np.isinf(gstar):
        return -np.inf
    return -float(np.mean(prob.loss.conj(prob.b, y))) - gstar


def duality_gap(prob, x, y):
    return primal_objective(prob, x) - dual_objective(prob, y)


def saddle_value(prob, x, y):
    """``L(x, y)`` of the ERM saddle formulation."""
    x = np.asarray(x, dtype=float)
    z = prob.matvec(x)
    return float(np.mean(y * z - prob.loss.conj(prob.b, y))) + prob.reg.value(x)


def _gram_matvec(prob):
    A = prob.A
    return lambda v: np.asarray(A.T @ (A @ v), dtype=float).ravel()


def _power_top(matvec, d, rng, maxiter, tol):
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    theta_old = 0.0
    for _ in range(maxiter):
        w = matvec(v)
        theta = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        if abs(theta - theta_old) <= tol * theta:
            return theta
        theta_old = theta
        v = w / nw
    raise ConvergenceError(f"power iteration did not converge in {maxiter} iterations")


def _inverse_bottom(prob, L2_, rng, maxiter, tol):
    """Smallest eigenvalue of ``A^T A`` by inverse iteration on its Cholesky factor.

    Returns 0 when ``A^T A`` is numerically singular.
    """
    A = prob.A
    G = (A.T @ A).toarray() if prob.is_sparse else A.T @ A
    G = np.asarray(G, dtype=float)
    rank_floor = prob.d * np.finfo(float).eps * L2_
    try:
        factor = scipy.linalg.cho_factor(G, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        return 0.0
    v = rng.standard_normal(prob.d)
    v /= np.linalg.norm(v)
    theta_old = np.inf
    for _ in range(maxiter):
        w = scipy.linalg.cho_solve(factor, v, check_finite=False)
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            return 0.0
        v = w / nw
        Av = prob.matvec(v)
        theta = float(Av @ Av)
        if theta <= rank_floor:
            return 0.0
        if abs(theta_old - theta) <= tol * theta:
            return theta
        theta_old = theta
    raise ConvergenceError(f"inverse iteration did not converge in {maxiter} iterations")


def spectral_constants(prob, need_mu=False, seed=0, maxiter=1000, tol=1e-9, mu_tol=1e-12):
    """Compute ``L``, ``R`` and optionally ``mu`` for a problem.

    ``L`` comes from power iteration on ``A^T A``. ``mu`` (when ``need_mu``)
    from inverse iteration on a Cholesky factorization of ``A^T A``, which
    requires ``d <= MU_DENSE_LIMIT``; ``mu = 0`` is returned exactly when
    ``n < d`` or the Gram matrix is numerically singular. Without
    ``need_mu`` the returned ``mu`` is 0.
    """
    rng = np.random.default_rng(seed)
    L2_ = _power_top(_gram_matvec(prob), prob.d, rng, maxiter, tol)
    mu = 0.0
    if need_mu:
        if prob.n < prob.d:
            mu = 0.0
        elif prob.d > MU_DENSE_LIMIT:
            raise ConfigError(
                f"smallest singular value needs d <= {MU_DENSE_LIMIT} (got d = {prob.d})"
            )
        else:
            mu2 = _inverse_bottom(prob, L2_, rng, maxiter, mu_tol)
            mu = float(np.sqrt(min(mu2, L2_)))
    L = float(np.sqrt(L2_))
    return SpectralConstants(
        L=L,
        mu=min(mu, L),
        R=prob.R,
        lam=prob.reg.lam,
        gamma=prob.loss.gamma,
        delta=prob.loss.delta,
    )


def batch_constants(sc, n):
    """Constants of the batch saddle ``g(x) + y^T K x - f^*(y)`` for ERM data.

    The ERM saddle is written in batch form with ``K = A / n`` and
    ``f^*(y) = (1/n) sum_i phi_i^*(y_i)``, i.e. ``f(z) = (1/n) sum_i
    phi_i(n z_i)``. Then ``||K|| = L/n``, ``sqrt(lambda_min(K^T K)) = mu/n``,
    ``f`` is ``n delta``-strongly convex and ``n/gamma``-smooth, and the dual
    variable ``y`` keeps its ERM meaning.
    """
    return SpectralConstants(
        L=sc.L / n,
        mu=sc.mu / n,
        R=sc.R,
        lam=sc.lam,
        gamma=sc.gamma / n,
        delta=sc.delta * n,
    )


def ridge_saddle(prob):
    """Closed-form saddle point for squared loss with an L2 regularizer."""
    if not isinstance(prob.loss, SquaredLoss) or not isinstance(prob.reg, L2):
        raise ConfigError("closed-form saddle needs squared loss and L2 regularization")
    A = prob.A.toarray() if prob.is_sparse else prob.A
    n, d = A.shape
    H = A.T @ A / n + prob.reg.lam * np.eye(d)
    x = scipy.linalg.solve(H, A.T @ prob.b / n, assume_a="pos")
    y = A @ x - prob.b
    return x, y
