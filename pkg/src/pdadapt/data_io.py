"""Datasets: LibSVM text format, synthetic Gaussian designs, row normalization."""

import gzip
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigError, ParseError
from .problem import ProblemInstance

__all__ = [
    "Dataset",
    "parse_libsvm",
    "serialize_libsvm",
    "load_libsvm",
    "synth_gaussian",
    "synth_covariance",
    "normalize_rows",
    "to_problem",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature rows ``X`` (CSR or dense), labels and provenance."""

    X: object
    labels: np.ndarray
    name: str = "data"
    source: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.X)

    def row_norms(self):
        if self.is_sparse:
            return np.sqrt(np.asarray(self.X.multiply(self.X).sum(axis=1)).ravel())
        return np.linalg.norm(self.X, axis=1)


def _number(token, lineno, what):
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"non-numeric {what} {token!r}", lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite {what} {token!r}", lineno)
    return v


def parse_libsvm(stream, n_features=None, name="libsvm"):
    """Parse LibSVM lines ``label idx:val idx:val ...`` into a CSR dataset.

    Indices are 1-based and must be strictly increasing within a row. Text
    after ``#`` is ignored and blank lines are skipped. ``d`` is the largest
    index seen unless ``n_features`` is given. Raises ``ParseError`` carrying
    the 1-based line number of the first bad line.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, indptr, indices, values = [], [0], [], []
    max_idx = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_number(tokens[0], lineno, "label"))
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"non-integer index {idx_s!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not positive", lineno)
            if idx <= prev:
                raise ParseError(f"index {idx} does not increase (previous {prev})", lineno)
            prev = idx
            indices.append(idx - 1)
            values.append(_number(val_s, lineno, "value"))
        max_idx = max(max_idx, prev)
        indptr.append(len(indices))
    if not labels:
        raise ParseError("no data rows", 1)
    d = max_idx if n_features is None else int(n_features)
    if d < max_idx:
        raise ParseError(f"index {max_idx} exceeds n_features = {d}", None)
    d = max(d, 1)
    X = sp.csr_matrix(
        (np.array(values, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(labels), d),
    )
    return Dataset(X, np.array(labels, dtype=float), name=name, source="libsvm")


def _fmt(v):
    v = float(v)
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def serialize_libsvm(ds, stream=None):
    """Write ``ds`` in canonical LibSVM form; returns the text if no stream.

    Explicit zeros are dropped and integral numbers are written without a
    decimal point; floats otherwise use the shortest round-tripping repr.
    """
    X = ds.X if ds.is_sparse else sp.csr_matrix(ds.X)
    X = sp.csr_matrix(X)
    X.sort_indices()
    out = io.StringIO() if stream is None else stream
    for i in range(X.shape[0]):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        parts = [_fmt(ds.labels[i])]
        parts += [f"{j + 1}:{_fmt(v)}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]) if v != 0]
        out.write(" ".join(parts) + "\n")
    if stream is None:
        return out.getvalue()
    return None


def load_libsvm(path, n_features=None):
    """Read a LibSVM file from disk; ``.gz`` files are decompressed."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt") as fh:
        ds = parse_libsvm(fh, n_features=n_features, name=str(path))
    return replace(ds, source=str(path))


def synth_covariance(d, q):
    """Toeplitz matrix ``Sigma_ij = 2**(-|i - j| / q)``."""
    if q <= 0:
        raise ConfigError(f"decay denominator must be positive, got {q}")
    k = np.arange(d)
    return np.exp2(-np.abs(k[:, None] - k[None, :]) / q)


def synth_gaussian(n, d, q, seed=0, task="regression", noise=0.01):
    """Gaussian rows with covariance ``2**(-|i - j| / q)`` and planted labels.

    Rows are ``z_i S`` with ``z_i ~ N(0, I)`` and ``S`` the symmetric square
    root of the covariance. A planted ``x_true ~ N(0, I)`` gives labels
    ``A x_true + noise * N(0, 1)`` (``task="regression"``) or
    ``sign(A x_true)`` with ties sent to ``+1`` (``task="classification"``).
    Rows are not normalized here; see ``normalize_rows``.
    """
    if n < 1 or d < 1:
        raise ConfigError("n and d must be positive")
    if task not in ("regression", "classification"):
        raise ConfigError(f"unknown task {task!r}")
    cov = synth_covariance(d, q)
    w, V = scipy.linalg.eigh(cov)
    if w[0] <= 0:
        raise ConfigError("covariance is not positive definite")
    S = (V * np.sqrt(w)) @ V.T
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, d))
    X = Z @ S
    x_true = rng.standard_normal(d)
    z = X @ x_true
    if task == "regression":
        labels = z + noise * rng.standard_normal(n)
    else:
        labels = np.where(z >= 0, 1.0, -1.0)
    return Dataset(
        X,
        labels,
        name=f"synth(n={n},d={d},q={q:g})",
        source="synthetic",
        meta={"x_true": x_true, "seed": seed, "task": task},
    )


def normalize_rows(ds):
    """Scale all rows by one factor so the largest row norm is 1."""
    norms = ds.row_norms()
    m = float(norms.max()) if norms.size else 0.0
    if m == 0.0:
        raise ConfigError("cannot normalize all-zero data")
    if m == 1.0:
        return ds
    X = ds.X * (1.0 / m)
    X = sp.csr_matrix(X) if ds.is_sparse else X
    return replace(ds, X=X, meta={**ds.meta, "row_scale": 1.0 / m})


def to_problem(ds, loss, reg):
    return ProblemInstance(ds.X, ds.labels, loss, reg, name=ds.name)
