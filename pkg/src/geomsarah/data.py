"""Sparse binary-classification datasets: LibSVM I/O and synthetic fixtures."""

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .rand import RngStream


class LibSVMParseError(ValueError):
    def __init__(self, lineno, msg):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}")


@dataclass(frozen=True, eq=False)
class SparseDataset:
    """Immutable feature matrix (CSR, 0-based columns) with labels in {-1, +1}."""

    X: sparse.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        X = sparse.csr_matrix(self.X, dtype=np.float64)
        if not X.has_sorted_indices:
            X.sort_indices()
        if not X.has_canonical_format:
            raise ValueError("duplicate feature index within a row")
        y = np.asarray(self.y, dtype=np.float64).copy()
        n, d = X.shape
        if n < 1 or d < 1:
            raise ValueError(f"dataset needs n >= 1 and d >= 1, got shape {X.shape}")
        if y.shape != (n,):
            raise ValueError(f"expected {n} labels, got shape {y.shape}")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ValueError("labels must be -1 or +1")
        for a in (X.data, X.indices, X.indptr, y):
            a.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def rows(self):
        X = self.X
        return [
            list(zip(X.indices[a:b].tolist(), X.data[a:b].tolist()))
            for a, b in zip(X.indptr[:-1], X.indptr[1:])
        ]

    @classmethod
    def from_rows(cls, rows, labels, d=None):
        indptr = [0]
        indices, data = [], []
        for row in rows:
            for j, v in row:
                indices.append(j)
                data.append(v)
            indptr.append(len(indices))
        if d is None:
            d = max(indices, default=0) + 1
        X = sparse.csr_matrix(
            (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(len(rows), d),
        )
        return cls(X, np.asarray(labels, dtype=np.float64))

    def same_as(self, other):
        """Structural equality: shape, sparsity pattern, values and labels."""
        a, b = self.X, other.X
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
            and np.array_equal(self.y, other.y)
        )


def _map_labels(raw, linenos):
    distinct = sorted(set(raw))
    if len(distinct) > 2:
        seen = []
        for v, ln in zip(raw, linenos):
            if v not in seen:
                seen.append(v)
                if len(seen) == 3:
                    raise LibSVMParseError(ln, f"more than two distinct labels {seen}")
    if set(distinct) <= {-1.0, 1.0}:
        return np.array(raw, dtype=np.float64)
    if len(distinct) == 1:
        return np.full(len(raw), 1.0 if distinct[0] > 0 else -1.0)
    lo = distinct[0]
    return np.where(np.array(raw) == lo, -1.0, 1.0)


def parse_libsvm(source, n_features=None):
    """Parse LibSVM text ``<label> <idx>:<val> ...`` into a :class:`SparseDataset`.

    ``source`` is ``str``, ``bytes`` or a binary/text file object.  Indices in
    the file are 1-based and must increase strictly along a line.  Blank
    lines are skipped and ``#`` starts a comment.  The feature dimension is
    the largest index seen, or ``n_features`` if that is larger.

    Labels already in {-1, +1} are kept; otherwise the smaller of the two
    raw label values becomes -1 and the larger +1.
    """
    if isinstance(source, (bytes, bytearray)):
        source = source.decode("utf-8")
    if isinstance(source, str):
        lines = io.StringIO(source)
    else:
        lines = source

    raw_labels, label_lines = [], []
    indptr, indices, data = [0], [], []
    for lineno, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibSVMParseError(lineno, f"bad label {tokens[0]!r}") from None
        if not math.isfinite(label):
            raise LibSVMParseError(lineno, f"bad label {tokens[0]!r}")
        prev = 0
        for tok in tokens[1:]:
            idx, colon, val = tok.partition(":")
            if not colon:
                raise LibSVMParseError(lineno, f"missing ':' in {tok!r}")
            try:
                j = int(idx)
                v = float(val)
            except ValueError:
                raise LibSVMParseError(lineno, f"non-numeric pair {tok!r}") from None
            if j < 1:
                raise LibSVMParseError(lineno, f"index {j} is not 1-based")
            if j <= prev:
                raise LibSVMParseError(lineno, f"index {j} does not increase after {prev}")
            if not math.isfinite(v):
                raise LibSVMParseError(lineno, f"non-finite value in {tok!r}")
            prev = j
            indices.append(j - 1)
            data.append(v)
        indptr.append(len(indices))
        raw_labels.append(label)
        label_lines.append(lineno)

    if not raw_labels:
        raise LibSVMParseError(0, "empty dataset")
    y = _map_labels(raw_labels, label_lines)
    d = max(max(indices, default=-1) + 1, n_features or 0, 1)
    X = sparse.csr_matrix(
        (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(raw_labels), d),
    )
    return SparseDataset(X, y)


def load_libsvm(path, n_features=None):
    with open(path, "rb") as fh:
        return parse_libsvm(fh, n_features=n_features)


def dump_libsvm(ds):
    """Serialize to LibSVM text with ``%.17g`` values and 1-based indices."""
    out = []
    for label, row in zip(ds.y.tolist(), ds.rows):
        parts = ["+1" if label > 0 else "-1"]
        parts.extend(f"{j + 1}:{v:.17g}" for j, v in row)
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def synth_logistic(n, d, seed, separation=1.0):
    """Dense Gaussian features with labels from a noisy logistic model.

    A unit ground-truth direction ``u`` and features ``w_i ~ N(0, I)`` are
    drawn from ``RngStream(seed)``; ``y_i = +1`` with probability
    ``sigmoid(separation * <w_i, u>)``.  Larger ``separation`` means fewer
    flipped labels.
    """
    if n < 2 or d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    rng = RngStream(seed)
    u = rng.child(0).normal(d)
    u /= np.linalg.norm(u) or 1.0
    W = rng.child(1).normal(n * d).reshape(n, d)
    margin = separation * (W @ u)
    p_pos = 0.5 * (1.0 + np.tanh(0.5 * margin))
    y = np.where(rng.child(2).uniform(n) < p_pos, 1.0, -1.0)
    return SparseDataset(sparse.csr_matrix(W), y)


def row_sq_norms(ds):
    """Per-row squared Euclidean norms, each summed left to right."""
    X = ds.X
    return X.multiply(X) @ np.ones(X.shape[1])
