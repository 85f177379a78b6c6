"""Time the compiled kernels against the pure-Python fallback.

Each kernel runs one pass (``n`` coordinate steps) over a logistic and a
ridge instance, for both backends, from identical starting state. The
largest entrywise difference between the two final iterates is printed
next to the timings.

Run with ``python benchmarks/bench_kernels.py [--n N] [--d D] [--repeat R]``.
"""

import argparse
import time

import numpy as np

from pdadapt import kernels
from pdadapt import spdc as sp
from pdadapt.data_io import normalize_rows, synth_gaussian, to_problem
from pdadapt.losses import LogisticLoss, SquaredLoss
from pdadapt.problem import spectral_constants
from pdadapt.regularizers import L2


def make_problem(loss, n, d, seed=0):
    task = "classification" if loss == "logistic" else "regression"
    ds = normalize_rows(synth_gaussian(n, d, 2.0, seed=seed, task=task))
    phi = LogisticLoss() if loss == "logistic" else SquaredLoss()
    return to_problem(ds, phi, L2(1.0 / n))


def _spdc_case(prob, seed):
    params = sp.spdc_params(spectral_constants(prob), prob.n)
    idx = np.random.default_rng(seed).integers(0, prob.n, size=prob.n).astype(np.int64)
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    code = kernels.loss_code(prob.loss)

    def setup():
        return sp.init_spdc_state(prob, seed=seed)

    def run(impl, st):
        impl.spdc_epoch(indptr, indices, data, prob.b, st.x, st.x_prev, st.x_tilde, st.y, st.y,
                        st.u, idx, params.tau, params.sigma, params.theta, 1.0 / prob.n, code,
                        False, l1, l2)
        return st.x

    return setup, run


def _svrg_case(prob, seed):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, prob.n, size=prob.n).astype(np.int64)
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    code = kernels.loss_code(prob.loss)
    x0 = rng.normal(scale=0.1, size=prob.d)
    snap = np.asarray(prob.loss.deriv(prob.b, prob.matvec(x0)), dtype=float)
    full = prob.rmatvec(snap) / prob.n
    eta = 0.1 / prob.R**2

    def setup():
        return x0.copy()

    def run(impl, x):
        impl.svrg_epoch(indptr, indices, data, prob.b, x, snap, full, idx, eta, code, l1, l2)
        return x

    return setup, run


def _saga_case(prob, seed):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, prob.n, size=prob.n).astype(np.int64)
    indptr, indices, data = prob.csr
    l1, l2 = kernels.reg_weights(prob.reg)
    code = kernels.loss_code(prob.loss)
    x0 = rng.normal(scale=0.1, size=prob.d)
    eta = 1.0 / (3 * prob.R**2)

    def setup():
        table = np.asarray(prob.loss.deriv(prob.b, prob.matvec(x0)), dtype=float)
        return x0.copy(), table, prob.rmatvec(table) / prob.n

    def run(impl, state):
        x, table, avg = state
        impl.saga_epoch(indptr, indices, data, prob.b, x, table, avg, idx, eta, 1.0 / prob.n,
                        code, l1, l2)
        return x

    return setup, run


CASES = {"spdc": _spdc_case, "svrg": _svrg_case, "saga": _saga_case}


def time_case(setup, run, impl, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        state = setup()
        t0 = time.perf_counter()
        out = run(impl, state)
        best = min(best, time.perf_counter() - t0)
    return best, np.array(out, copy=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    try:
        fast = kernels.backend("cython")
    except ImportError:
        fast = None
        print("compiled kernels not built; timing the Python fallback only")
    slow = kernels.backend("python")

    print(f"n={args.n} d={args.d}, one pass per run, best of {args.repeat}")
    print(f"{'kernel':<8} {'loss':<9} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>9}")
    for loss in ("squared", "logistic"):
        prob = make_problem(loss, args.n, args.d)
        for name, build in CASES.items():
            setup, run = build(prob, seed=1)
            t_py, x_py = time_case(setup, run, slow, args.repeat)
            if fast is None:
                print(f"{name:<8} {loss:<9} {t_py:>10.4f} {'-':>10} {'-':>8} {'-':>9}")
                continue
            t_cy, x_cy = time_case(setup, run, fast, args.repeat)
            diff = float(np.max(np.abs(x_py - x_cy)))
            print(f"{name:<8} {loss:<9} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>7.1f}x {diff:>9.1e}")


if __name__ == "__main__":
    main()
