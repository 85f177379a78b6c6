import numpy as np
import pytest

from pdadapt import baselines as bl
from pdadapt.errors import ConfigError
from pdadapt.problem import primal_objective, ridge_saddle

import instances


def test_config_validation():
    with pytest.raises(ConfigError):
        bl.BaselineConfig("sgd")
    with pytest.raises(ConfigError):
        bl.BaselineConfig("svrg", step=-1.0)
    with pytest.raises(ConfigError):
        bl.BaselineConfig("katyusha", m=0)


@pytest.mark.parametrize("kind", bl.KINDS)
def test_zero_budget(ridge_small, kind):
    tr = bl.run_baseline(ridge_small, kind, 0)
    assert len(tr.points) == 1 and tr.points[0].pass_ == 0
    assert tr.points[0].dual is None and tr.points[0].gap is None


@pytest.mark.parametrize("kind", bl.KINDS)
@pytest.mark.parametrize("which", ["ridge_small", "logistic_small", "elastic_small"])
def test_primal_decreases(kind, which, request):
    prob = request.getfixturevalue(which)
    tr = bl.run_baseline(prob, kind, 20, seed=1)
    assert list(tr.passes) == list(range(21))
    assert tr.final.primal < tr.points[0].primal
    assert tr.final.primal == pytest.approx(primal_objective(prob, tr.x), rel=1e-14)


def test_svrg_snapshot_is_batch_gradient(logistic_small, monkeypatch):
    prob = logistic_small
    real = bl.kernels.svrg_epoch
    seen = []
    last = [None]

    def spy(indptr, indices, data, b, x, snap, full, *rest):
        if full is not last[0]:
            # first inner pass after a snapshot: x is still the snapshot point
            z = prob.A @ x
            g = prob.A.T @ (-b / (1.0 + np.exp(b * z))) / prob.n
            seen.append(float(np.max(np.abs(g - full))))
            last[0] = full
        return real(indptr, indices, data, b, x, snap, full, *rest)

    monkeypatch.setattr(bl.kernels, "svrg_epoch", spy)
    bl.run_baseline(prob, bl.BaselineConfig("svrg", m=prob.n), 12, seed=0)
    assert len(seen) == 6 and max(seen) <= 1e-10


def test_svrg_reaches_high_accuracy():
    n = 1000
    prob = instances.ridge(n=n, d=100, q=2, seed=0)
    xs, _ = ridge_saddle(prob)
    p_star = primal_objective(prob, xs)
    tr = bl.run_baseline(prob, "svrg", 100, seed=0)
    assert tr.final.primal - p_star <= 1e-8


def test_primal_ag_distance_envelope():
    prob = instances.ridge(n=100, d=20, seed=5)
    xs, _ = ridge_saddle(prob)
    # the distance to the minimizer shrinks from one checkpoint to the next
    cfg = bl.BaselineConfig("primal-ag")
    dists = []
    for k in (10, 20, 40, 60):
        dists.append(np.linalg.norm(bl.run_baseline(prob, cfg, k).x - xs))
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_default_steps(ridge_small):
    sc = bl.spectral_constants(ridge_small)
    Lmax = ridge_small.R**2 / ridge_small.loss.gamma
    assert bl.default_step("svrg", ridge_small, sc) == pytest.approx(0.1 / Lmax)
    assert bl.default_step("saga", ridge_small, sc) == pytest.approx(1 / (3 * Lmax))
    with pytest.raises(ConfigError):
        bl.default_step("katyusha", ridge_small, sc)
