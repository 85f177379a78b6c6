import gzip
import io
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pdadapt.data_io import (
    Dataset,
    load_libsvm,
    normalize_rows,
    parse_libsvm,
    serialize_libsvm,
    synth_covariance,
    synth_gaussian,
    to_problem,
)
from pdadapt.errors import ConfigError, ParseError
from pdadapt.losses import SquaredLoss
from pdadapt.regularizers import L2

FIXTURE = Path(__file__).parent / "data" / "fixture.libsvm"


def test_parse_single_line():
    ds = parse_libsvm("1 1:0.5 3:-2\n")
    assert ds.n == 1 and ds.d == 3 and ds.labels[0] == 1.0
    np.testing.assert_array_equal(ds.X.toarray(), [[0.5, 0.0, -2.0]])


def test_parse_empty_row_and_comments():
    ds = parse_libsvm("-1\n# comment only\n\n2 2:1 # trailing\n", n_features=4)
    assert ds.n == 2 and ds.d == 4
    np.testing.assert_array_equal(ds.X.toarray(), [[0, 0, 0, 0], [0, 1, 0, 0]])
    np.testing.assert_array_equal(ds.labels, [-1.0, 2.0])


@pytest.mark.parametrize(
    "text, line",
    [
        ("1 1:1\n1 0:1\n", 2),
        ("1 1:1\n\n1 2:1 2:2\n", 3),
        ("x 1:1\n", 1),
        ("1 1:1\n1 1:inf\n", 2),
        ("1 1:1\n# c\n1 1\n", 3),
        ("1 1.5:1\n", 1),
        ("", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_libsvm(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


def test_n_features_too_small():
    with pytest.raises(ParseError):
        parse_libsvm("1 5:1\n", n_features=3)


def test_fixture_round_trip(tmp_path):
    text = FIXTURE.read_text()
    ds = parse_libsvm(text)
    assert serialize_libsvm(ds) == text
    gz = tmp_path / "f.libsvm.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write(text)
    ds2 = load_libsvm(gz)
    assert (ds2.X != ds.X).nnz == 0 and np.array_equal(ds2.labels, ds.labels)
    buf = io.StringIO()
    assert serialize_libsvm(ds, buf) is None and buf.getvalue() == text


row = st.lists(
    st.tuples(st.integers(1, 40), st.floats(allow_nan=False, allow_infinity=False, width=64)),
    max_size=8,
    unique_by=lambda t: t[0],
)


@settings(max_examples=100, deadline=None)
@given(rows=st.lists(st.tuples(st.floats(-1e6, 1e6), row), min_size=1, max_size=10))
def test_round_trip_property(rows):
    lines = []
    for label, feats in rows:
        feats = sorted((j, v) for j, v in feats if v != 0)
        parts = [repr(float(label))] + [f"{j}:{v!r}" for j, v in feats]
        lines.append(" ".join(parts))
    ds = parse_libsvm("\n".join(lines) + "\n")
    ds2 = parse_libsvm(serialize_libsvm(ds))
    assert ds2.X.shape == ds.X.shape and (ds2.X != ds.X).nnz == 0
    np.testing.assert_array_equal(ds2.labels, ds.labels)


def test_covariance_matrix():
    C = synth_covariance(4, 2)
    assert C[0, 0] == 1.0 and C[0, 1] == pytest.approx(2**-0.5) and C[0, 3] == pytest.approx(2**-1.5)
    assert np.all(np.linalg.eigvalsh(synth_covariance(50, 100)) > 0)
    with pytest.raises(ConfigError):
        synth_covariance(3, 0)


@pytest.mark.parametrize("seed", range(5))
def test_empirical_covariance_near_identity(seed):
    # each entry of the sample covariance has standard deviation about
    # 1/sqrt(n), so 5/sqrt(n) is a five-sigma entrywise bound; the operator
    # norm of the deviation concentrates near 2 sqrt(d/n) instead
    n, d = 10_000, 10
    ds = synth_gaussian(n, d, q=0.05, seed=seed)
    dev = ds.X.T @ ds.X / n - np.eye(d)
    assert np.abs(dev).max() <= 5 / np.sqrt(n)
    assert np.linalg.norm(dev, 2) <= 3 * np.sqrt(d / n)


def test_empirical_covariance_converges():
    n, d, q = 20_000, 8, 2
    ds = synth_gaussian(n, d, q, seed=1)
    emp = ds.X.T @ ds.X / n
    assert np.linalg.norm(emp - synth_covariance(d, q), 2) <= 10 / np.sqrt(n) * np.linalg.norm(
        synth_covariance(d, q), 2)


def test_synthetic_determinism_and_labels():
    a = synth_gaussian(50, 7, 2, seed=3)
    b = synth_gaussian(50, 7, 2, seed=3)
    assert a.X.tobytes() == b.X.tobytes() and a.labels.tobytes() == b.labels.tobytes()
    resid = a.labels - a.X @ a.meta["x_true"]
    assert np.std(resid) < 0.05
    c = synth_gaussian(50, 7, 2, seed=3, task="classification")
    assert set(np.unique(c.labels)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(c.labels, np.where(c.X @ c.meta["x_true"] >= 0, 1.0, -1.0))
    with pytest.raises(ConfigError):
        synth_gaussian(5, 2, 2, task="ranking")


def test_normalize_rows():
    ds = Dataset(np.array([[2.0, 0.0], [0.0, 4.0]]), np.zeros(2))
    out = normalize_rows(ds)
    np.testing.assert_allclose(out.row_norms(), [0.5, 1.0])
    assert normalize_rows(out) is out
    sparse = Dataset(sp.csr_matrix([[3.0, 0.0, 0.0], [0.0, 0.0, 6.0]]), np.zeros(2))
    ns = normalize_rows(sparse)
    assert ns.is_sparse and (ns.X != 0).nnz == 2
    np.testing.assert_array_equal(ns.X.indices, sparse.X.indices)
    with pytest.raises(ConfigError):
        normalize_rows(Dataset(np.zeros((2, 2)), np.zeros(2)))


def test_to_problem():
    ds = normalize_rows(synth_gaussian(20, 3, 2, seed=0))
    prob = to_problem(ds, SquaredLoss(), L2(0.1))
    assert prob.n == 20 and prob.d == 3 and prob.R == pytest.approx(1.0)
