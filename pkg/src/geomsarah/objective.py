"""Finite-sum objectives.

The benchmark objective is logistic loss with a non-convex, bounded penalty:

    f(x) = (1/n) sum_i f_i(x),
    f_i(x) = log(1 + exp(-y_i <w_i, x>)) + (lam/2) sum_j x_j^2 / (1 + x_j^2).

Each ``f_i`` is ``(|w_i|^2/4 + lam)``-smooth; ``L`` is the largest of these.
"""

import math

import numpy as np
from scipy.special import expit

from .data import row_sq_norms

# data sets with at most this many entries also keep a dense copy of X, which
# makes small-batch gradients two BLAS calls instead of a sparse gather
DENSE_LIMIT = 2**22


def _softplus_neg(t):
    # log(1 + exp(-t)) without overflow
    return np.maximum(-t, 0.0) + np.log1p(np.exp(-np.abs(t)))


class LogisticNcvx:
    """Logistic regression with the penalty ``lam/2 * sum x^2 / (1 + x^2)``.

    Parameters
    ----------
    ds : SparseDataset
    lam : float
        Penalty weight, ``>= 0``.
    """

    def __init__(self, ds, lam=0.1):
        lam = float(lam)
        if not lam >= 0:
            raise ValueError(f"lam must be >= 0, got {lam}")
        self.ds = ds
        self.lam = lam
        self.sq_norms = row_sq_norms(ds)
        self.sq_norms.flags.writeable = False
        self.L = float(self.sq_norms.max() / 4.0 + lam)
        if not self.L > 0:
            raise ValueError("smoothness constant is zero (all-zero data and lam == 0)")
        self._dense = None
        if ds.n * ds.d <= DENSE_LIMIT:
            self._dense = ds.X.toarray()
            self._dense.flags.writeable = False

    @property
    def n(self):
        return self.ds.n

    @property
    def d(self):
        return self.ds.d

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}, got shape {x.shape}")
        return x

    def _check_idx(self, idx):
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            raise ValueError("empty index list")
        if idx.min() < 0 or idx.max() >= self.n:
            raise IndexError(f"sample index out of range [0, {self.n})")
        return idx

    def penalty(self, x):
        # x^2 / (1 + x^2) as a square of x / sqrt(1 + x^2); hypot avoids overflow
        t = x / np.hypot(1.0, x)
        return 0.5 * self.lam * float(np.dot(t, t))

    def penalty_grad(self, x):
        # 1/(1 + x^2) via hypot so huge |x| underflows to 0 instead of overflowing
        r = 1.0 / np.hypot(1.0, x)
        r2 = r * r
        return self.lam * x * (r2 * r2)

    def value(self, x):
        x = self._check_x(x)
        X = self.ds.X if self._dense is None else self._dense
        t = self.ds.y * (X @ x)
        return math.fsum(_softplus_neg(t).tolist()) / self.n + self.penalty(x)

    def value_index(self, i, x):
        x = self._check_x(x)
        i = int(self._check_idx([i])[0])
        row = self.ds.X.getrow(i)
        t = self.ds.y[i] * float((row @ x)[0])
        return float(_softplus_neg(t)) + self.penalty(x)

    def _mean_grad(self, idx, x):
        # idx=None means every row
        y = self.ds.y if idx is None else self.ds.y[idx]
        if self._dense is not None:
            Xb = self._dense if idx is None else self._dense[idx]
            coef = -y * expit(-y * (Xb @ x))
            return (coef @ Xb) / y.size + self.penalty_grad(x)
        X = self.ds.X
        if idx is None:
            idx = np.arange(self.n)
        # gather the CSR slices of the selected rows; scipy fancy row indexing
        # costs more than the arithmetic for small batches
        starts = X.indptr[idx]
        lens = X.indptr[idx + 1] - starts
        row = np.repeat(np.arange(idx.size), lens)
        offsets = np.cumsum(lens) - lens
        pos = np.arange(row.size) + np.repeat(starts - offsets, lens)
        cols, vals = X.indices[pos], X.data[pos]
        margins = np.bincount(row, weights=vals * x[cols], minlength=idx.size)
        coef = -y * expit(-y * margins)
        g = np.bincount(cols, weights=vals * coef[row], minlength=self.d)
        return g / idx.size + self.penalty_grad(x)

    def grad_index(self, i, x, out=None):
        """Gradient of ``f_i`` at ``x``; added into ``out`` when given."""
        x = self._check_x(x)
        i = int(self._check_idx([i])[0])
        X = self.ds.X
        a, b = X.indptr[i], X.indptr[i + 1]
        cols, vals = X.indices[a:b], X.data[a:b]
        yi = self.ds.y[i]
        coef = -yi * float(expit(-yi * np.dot(vals, x[cols])))
        g = self.penalty_grad(x)
        g[cols] += coef * vals
        if out is None:
            return g
        out += g
        return out

    def grad_batch(self, idx, x):
        """Mean of ``grad_index(i, x)`` over ``idx`` (repeats allowed)."""
        x = self._check_x(x)
        idx = self._check_idx(idx)
        return self._mean_grad(idx, x)

    def full_grad(self, x):
        """Exact gradient of ``f``; same arithmetic as ``grad_batch(range(n), x)``."""
        x = self._check_x(x)
        return self._mean_grad(None, x)

    def sample_grads(self, x):
        """Dense ``(n, d)`` matrix of all per-sample gradients.  Small ``n`` only."""
        x = self._check_x(x)
        y = self.ds.y
        coef = -y * expit(-y * (self.ds.X @ x))
        G = self.ds.X.multiply(coef[:, None]).toarray()
        return G + self.penalty_grad(x)

    def grad_variance(self, x):
        """Population variance ``(1/n) sum_i |grad f_i(x) - grad f(x)|^2``."""
        G = self.sample_grads(x)
        return float(np.mean(np.sum((G - G.mean(axis=0)) ** 2, axis=1)))
