import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pdadapt.errors import ConfigError
from pdadapt.losses import LogisticLoss, SquaredLoss
from pdadapt.problem import (
    MU_DENSE_LIMIT,
    ProblemInstance,
    batch_constants,
    dual_objective,
    duality_gap,
    primal_objective,
    ridge_saddle,
    saddle_value,
    spectral_constants,
)
from pdadapt.regularizers import L2, ElasticNet

import instances
import oracles


def test_primal_examples():
    p0 = ProblemInstance(np.eye(2), np.zeros(2), SquaredLoss(), L2(0.0))
    assert primal_objective(p0, np.zeros(2)) == 0.0
    p1 = ProblemInstance(np.array([[1.0, 0.0]]), np.array([1.0]), SquaredLoss(), L2(2.0))
    assert primal_objective(p1, np.array([1.0, 0.0])) == 1.0
    p2 = ProblemInstance(np.array([[1.0]]), np.array([1.0]), LogisticLoss(), L2(0.0))
    assert primal_objective(p2, np.zeros(1)) == pytest.approx(math.log(2), abs=1e-15)


def test_dual_examples():
    p0 = ProblemInstance(np.eye(2), np.zeros(2), SquaredLoss(), L2(1.0))
    assert dual_objective(p0, np.zeros(2)) == 0.0
    p1 = ProblemInstance(np.array([[1.0]]), np.array([1.0]), SquaredLoss(), L2(1.0))
    assert dual_objective(p1, np.array([-0.5])) == pytest.approx(0.25, abs=1e-15)


def test_gap_zero_at_one_sample_saddle():
    p = ProblemInstance(np.array([[2.0]]), np.array([1.0]), SquaredLoss(), L2(0.5))
    xs, ys = ridge_saddle(p)
    assert abs(duality_gap(p, xs, ys)) <= 1e-9
    # scalar closed form: x* = a b / (a^2 + lam)
    assert xs[0] == pytest.approx(2.0 / 4.5, rel=1e-14)


def test_ridge_saddle_matches_direct_solve():
    prob = instances.ridge(n=80, d=15, seed=4)
    x, y = ridge_saddle(prob)
    xr, yr = oracles.ridge_closed_form(prob.A, prob.b, prob.reg.lam)
    np.testing.assert_allclose(x, xr, rtol=1e-10, atol=1e-12)
    assert primal_objective(prob, x) == pytest.approx(dual_objective(prob, yr), abs=1e-8)


def test_saddle_value_between_primal_and_dual():
    prob = instances.ridge(n=50, d=10, seed=2)
    xs, ys = ridge_saddle(prob)
    assert saddle_value(prob, xs, ys) == pytest.approx(primal_objective(prob, xs), abs=1e-10)


def test_spectral_examples():
    def sc_of(A):
        return spectral_constants(ProblemInstance(A, np.zeros(A.shape[0]), SquaredLoss(), L2(1.0)),
                                  need_mu=True)

    sc = sc_of(np.eye(2))
    assert (sc.L, sc.mu, sc.R) == pytest.approx((1.0, 1.0, 1.0), rel=1e-9)
    sc = sc_of(np.diag([3.0, 1.0]))
    assert (sc.L, sc.mu, sc.R) == pytest.approx((3.0, 1.0, 3.0), rel=1e-9)


def test_spectral_vs_svd_sparse():
    rng = np.random.default_rng(0)
    A = sp.random(60, 25, density=0.3, random_state=1, format="csr") + sp.eye(60, 25)
    prob = ProblemInstance(A, rng.normal(size=60), SquaredLoss(), L2(0.1))
    sc = spectral_constants(prob, need_mu=True)
    s = np.linalg.svd(A.toarray(), compute_uv=False)
    assert sc.L == pytest.approx(s[0], rel=1e-6)
    assert sc.mu == pytest.approx(s[-1], rel=1e-6)


def test_spectral_deterministic_and_wide():
    prob = instances.random_dense(20, 30, seed=3)
    a = spectral_constants(prob, need_mu=True, seed=5)
    b = spectral_constants(prob, need_mu=True, seed=5)
    assert a == b
    assert a.mu == 0.0  # n < d: A^T A is singular


def test_spectral_refuses_large_dense_mu():
    A = sp.eye(MU_DENSE_LIMIT + 1, MU_DENSE_LIMIT + 1, format="csr")
    prob = ProblemInstance(A, np.zeros(A.shape[0]), SquaredLoss(), L2(1.0))
    with pytest.raises(ConfigError):
        spectral_constants(prob, need_mu=True)
    assert spectral_constants(prob).L == pytest.approx(1.0)


def test_batch_constants_mapping():
    sc = spectral_constants(instances.ridge(n=50, d=10, seed=1), need_mu=True)
    scb = batch_constants(sc, 50)
    assert scb.L == sc.L / 50 and scb.mu == sc.mu / 50
    assert scb.gamma == sc.gamma / 50 and scb.delta == sc.delta * 50
    # the condition number L^2 / (gamma (lam + delta mu^2)) is unchanged
    k = sc.L**2 / (sc.gamma * (50 * sc.lam + sc.delta * sc.mu**2))
    kb = scb.L**2 / (scb.gamma * (scb.lam + scb.delta * scb.mu**2))
    assert kb == pytest.approx(k, rel=1e-12)


def test_zero_lambda_dual_sentinel():
    prob = ProblemInstance(np.eye(2), np.ones(2), SquaredLoss(), L2(0.0))
    assert dual_objective(prob, np.zeros(2)) == 0.0
    assert dual_objective(prob, np.array([0.1, 0.0])) == -np.inf


def test_bad_instances():
    with pytest.raises(ConfigError):
        ProblemInstance(np.ones((3, 2)), np.ones(2), SquaredLoss(), L2(1.0))
    with pytest.raises(ConfigError):
        ProblemInstance(np.array([[np.nan]]), np.ones(1), SquaredLoss(), L2(1.0))
    with pytest.raises(ConfigError):
        ProblemInstance(np.ones(3), np.ones(3), SquaredLoss(), L2(1.0))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), which=st.sampled_from(["sq", "lg", "en"]))
def test_weak_duality(seed, which):
    rng = np.random.default_rng(seed)
    n, d = 12, 5
    A = rng.normal(size=(n, d))
    if which == "lg":
        b = rng.choice([-1.0, 1.0], size=n)
        prob = ProblemInstance(A, b, LogisticLoss(), L2(0.3))
        y = -b * rng.uniform(0, 1, size=n)
    else:
        b = rng.normal(size=n)
        reg = L2(0.3) if which == "sq" else ElasticNet(0.2, 0.3)
        prob = ProblemInstance(A, b, SquaredLoss(), reg)
        y = rng.normal(scale=3.0, size=n)
    x = rng.normal(scale=2.0, size=d)
    assert primal_objective(prob, x) >= dual_objective(prob, y) - 1e-9
