"""Randomness for the optimizers.

Every random draw in the package goes through :class:`RngStream`, a thin
wrapper around numpy's counter-based ``Philox`` bit generator keyed by a
``SeedSequence``.  Only the raw 64-bit output of the bit generator is used;
uniforms, normals, bounded integers, geometric variates and subsets are all
derived from it here, so a given ``(seed, key)`` pair yields the same numbers
on every platform and numpy version that preserves ``Philox`` and
``SeedSequence`` output.

Stream splitting
----------------
A stream is identified by ``(seed, key)`` where ``key`` is a tuple of
non-negative integers.  ``stream.child(i, j)`` is the stream with key
``key + (i, j)``; ``stream.split(k)`` is ``[stream.child(i) for i in
range(k)]``.  Children are derived from the identity of the parent, not from
its position, so splitting never consumes parent output.
"""

import math
from typing import Callable, NamedTuple

import numpy as np

MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


class RngStream:
    """Seedable, splittable source of random numbers.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed (reduced mod 2**64).
    stream_id : int
        Top-level stream identifier, the first element of ``key``.
    """

    def __init__(self, seed, stream_id=0, *, _key=None):
        self.seed = int(seed) & MASK64
        self.key = (int(stream_id) & MASK64,) if _key is None else tuple(_key)
        self._gen = None

    @property
    def _bits(self):
        # built on first draw; streams used only as parents never pay for it
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
            self._gen = np.random.Philox(ss)
        return self._gen

    @property
    def stream_id(self):
        return self.key[0]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"

    def child(self, *path):
        return RngStream(self.seed, _key=self.key + tuple(int(p) for p in path))

    def split(self, k):
        return [self.child(i) for i in range(k)]

    def raw(self, size=None):
        return self._bits.random_raw(size)

    def uniform(self, size=None):
        """Uniform doubles in [0, 1) with 53 random bits."""
        r = self._bits.random_raw(size)
        if size is None:
            return (int(r) >> 11) * _TWO_M53
        return (r >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def uniform_pos(self, size=None):
        """Uniform doubles in (0, 1]; safe to pass to ``log``."""
        r = self._bits.random_raw(size)
        if size is None:
            return ((int(r) >> 11) + 1) * _TWO_M53
        return ((r >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_M53

    def normal(self, size):
        """Standard normals by the Box-Muller transform (cosine branch only)."""
        u1 = self.uniform_pos(size)
        u2 = self.uniform(size)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def below(self, bound, size=None):
        """Integers uniform on ``[0, bound)`` as ``floor(u * bound)``.

        The bias is at most ``bound / 2**53`` per value.
        """
        u = self.uniform(size)
        if size is None:
            return int(u * bound)
        return np.floor(u * np.asarray(bound, dtype=np.float64)).astype(np.int64)


def _geom_ratio(mean):
    if not mean > 0 or not math.isfinite(mean):
        raise ValueError(f"geometric mean must be positive and finite, got {mean!r}")
    return mean / (1.0 + mean)


def geom_sample(rng, mean, size=None):
    """Draw ``N >= 0`` with ``P(N = k) = g**k (1 - g)``, ``g = mean / (1 + mean)``.

    ``E[N] = mean``.  Sampled by inversion, ``N = floor(log(U) / log(g))``
    with ``U`` uniform on (0, 1].
    """
    g = _geom_ratio(mean)
    log_g = -math.log1p(1.0 / mean)  # == log(g), accurate for large mean
    u = rng.uniform_pos(size)
    if size is None:
        return int(math.floor(math.log(u) / log_g))
    return np.floor(np.log(u) / log_g).astype(np.int64)


def geom_pmf(mean, k):
    g = _geom_ratio(mean)
    k = np.asarray(k)
    return (1.0 - g) * g**k


def sample_without_replacement(rng, population, k):
    """Uniform random ``k``-subset of ``range(population)``.

    Partial Fisher-Yates shuffle over a virtual index arena held in a dict,
    so memory and time are O(k).  Position ``t`` swaps with a uniform index
    in ``[t, population)``; the first ``k`` positions are returned in draw
    order.  ``k == population`` returns ``range(population)`` in order.
    """
    population = int(population)
    k = int(k)
    if k < 1 or k > population:
        raise ValueError(f"need 1 <= k <= population, got k={k}, population={population}")
    if k == population:
        # only one subset; no randomness consumed
        return np.arange(population, dtype=np.int64)
    if k <= 32:
        # same draws as the vectorized branch, without numpy call overhead
        picks = [t + int(((r >> 11) * _TWO_M53) * (population - t))
                 for t, r in enumerate(rng.raw(k).tolist())]
    else:
        t = np.arange(k)
        picks = (t + rng.below(population - t, size=k)).tolist()
    arena = {}
    out = [0] * k
    for t, j in enumerate(picks):
        vj = arena.get(j, j)
        arena[j] = arena.get(t, t)
        out[t] = vj
    return np.array(out, dtype=np.int64)


class TailDistribution:
    """Law of the output epoch index: ``P(j) ∝ weights[j - lo]`` on ``[lo, hi]``."""

    def __init__(self, lo, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValueError("tail weights must be positive and finite")
        self.lo = int(lo)
        self.hi = self.lo + w.size - 1
        self.weights = w
        self.total = math.fsum(w)

    @classmethod
    def point_mass(cls, j):
        return cls(j, [1.0])

    @property
    def support(self):
        return np.arange(self.lo, self.hi + 1)

    def probabilities(self):
        return self.weights / self.total

    def __repr__(self):
        return f"TailDistribution(lo={self.lo}, hi={self.hi}, total={self.total!r})"


def tail_index(rng, td):
    """Sample from ``td`` by inversion over the cumulative weights."""
    cum = np.cumsum(td.weights)
    u = rng.uniform() * cum[-1]
    i = int(np.searchsorted(cum, u, side="right"))
    return td.lo + min(i, td.weights.size - 1)


class IdentityCheck(NamedTuple):
    lhs_estimate: float
    rhs_exact: float
    std_err: float


def geom_expectation(D: Callable, mean, tail_tol=1e-14, max_terms=10**7):
    """``E[D(N)]`` for ``N ~ Geom`` with the given mean, by truncated series.

    Summation starts at ``k = 0..K`` with ``P(N > K) < tail_tol`` and is then
    extended in doubling chunks until the last chunk contributes less than
    ``tail_tol`` relative to the running total.  Sequences growing faster
    than ``1/g^k`` never meet this and raise ``ValueError``.
    """
    g = _geom_ratio(mean)
    K = max(0, math.ceil(math.log(tail_tol) / math.log(g)) - 1)
    while g ** (K + 1) >= tail_tol:
        K += 1
    k = np.arange(K + 1)
    parts = (geom_pmf(mean, k) * np.asarray(D(k), dtype=np.float64)).tolist()
    lo = K + 1
    while True:
        hi = 2 * lo
        if hi > max_terms:
            raise ValueError("series for E[D(N)] did not converge")
        k = np.arange(lo, hi)
        chunk = (geom_pmf(mean, k) * np.asarray(D(k), dtype=np.float64)).tolist()
        parts.extend(chunk)
        if math.fsum(abs(t) for t in chunk) <= tail_tol * max(1.0, abs(math.fsum(parts))):
            return math.fsum(parts)
        lo = hi


def geometrization_identity_check(D, mean, n_draws, rng):
    """Monte-Carlo check of ``E[D_N - D_{N+1}] = (D_0 - E[D_N]) / E[N]``.

    ``D`` maps an integer array ``k`` to the sequence values ``D_k``.
    Returns the sample mean of ``D_N - D_{N+1}`` over ``n_draws`` draws,
    the right-hand side from the truncated series, and the standard error
    of the sample mean.
    """
    N = geom_sample(rng, mean, size=int(n_draws))
    diffs = np.asarray(D(N), dtype=np.float64) - np.asarray(D(N + 1), dtype=np.float64)
    lhs = float(diffs.mean())
    se = float(diffs.std(ddof=1) / math.sqrt(diffs.size)) if diffs.size > 1 else math.inf
    d0 = float(np.asarray(D(np.array([0])), dtype=np.float64)[0])
    rhs = (d0 - geom_expectation(D, mean)) / mean
    return IdentityCheck(lhs, rhs, se)
