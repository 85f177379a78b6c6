import importlib
import subprocess
import sys

import numpy as np
import pytest

from pdadapt import _fallback, kernels
from pdadapt import spdc as sp
from pdadapt.baselines import run_baseline
from pdadapt.problem import spectral_constants

import instances

try:
    from pdadapt import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not available")


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.backend("python") is _fallback
    with pytest.raises(ValueError):
        kernels.backend("fortran")


def test_pure_python_override():
    code = "import pdadapt.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"PDADAPT_PURE_PYTHON": "1", **_env()},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _env():
    import os

    return {k: v for k, v in os.environ.items() if k != "PDADAPT_PURE_PYTHON"}


@needs_ext
@pytest.mark.parametrize("which", ["ridge", "logistic", "elastic"])
@pytest.mark.parametrize("dual_free", [False, True])
def test_spdc_backends_agree(which, dual_free):
    prob = getattr(instances, which)(n=80, d=15, seed=1)
    sc = spectral_constants(prob)
    fn = sp.adf_spdc_params if dual_free else sp.spdc_params
    params = fn(sc, prob.n)
    states = [sp.init_spdc_state(prob, dual_free, seed=9) for _ in range(2)]
    for _ in range(5):
        sp.spdc_epoch(prob, params, states[0], dual_free, backend="python")
        sp.spdc_epoch(prob, params, states[1], dual_free, backend="cython")
    a, b = states
    np.testing.assert_allclose(a.x, b.x, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.y, b.y, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.u, b.u, rtol=1e-12, atol=1e-14)


@needs_ext
def test_logistic_prox_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(200):
        b = float(rng.choice([-1.0, 1.0]))
        sigma = float(np.exp(rng.uniform(-6, 6)))
        z = float(rng.normal(scale=5))
        assert _kernels.logistic_prox(b, sigma, z) == pytest.approx(
            _fallback.logistic_prox(b, sigma, z), abs=1e-14)


@needs_ext
@pytest.mark.parametrize("kind", ["svrg", "saga"])
def test_baseline_kernels_agree(kind, monkeypatch):
    prob = instances.logistic(n=60, d=10, seed=3)
    fast = run_baseline(prob, kind, 5, seed=1)
    module = importlib.import_module("pdadapt.baselines")
    monkeypatch.setattr(module.kernels, f"{kind}_epoch", getattr(_fallback, f"{kind}_epoch"))
    slow = run_baseline(prob, kind, 5, seed=1)
    np.testing.assert_allclose(fast.x, slow.x, rtol=1e-12, atol=1e-14)


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    mod = runpy.run_path(str(script))
    mod["main"](["--n", "50", "--d", "5", "--repeat", "1"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and lines[2].startswith("spdc")
