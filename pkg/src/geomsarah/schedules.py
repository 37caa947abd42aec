"""Per-epoch hyperparameters for Geom-SARAH and the baseline methods.

Every schedule returns :class:`EpochParams` ``(eta, b, m, B)``:

* ``B`` -- big-batch size for the anchor estimate at the start of an epoch,
* ``b`` -- inner mini-batch size,
* ``m`` -- expected number of inner-loop queries; the inner loop runs
  ``m / b`` steps in expectation (geometric kinds) or exactly
  ``inner_steps`` steps (deterministic baselines),
* ``eta`` -- step size.

The Geom-SARAH variants all use ``b = max(1, floor(sqrt(m)))`` and
``eta = b / (2 L sqrt(m))``, so ``2 eta L = b / sqrt(m) <= 1``.
"""

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache


class Kind(str, enum.Enum):
    Q = "q-geom-sarah"
    E = "e-geom-sarah"
    NONADAPTIVE_F = "nonadaptive-f"
    NONADAPTIVE_G = "nonadaptive-g"
    NONADAPTIVE = "nonadaptive"
    SARAH = "sarah"
    SVRG = "svrg"
    SCSG = "scsg"
    SGD = "sgd"
    SARAH_LP = "sarah-lp"
    SVRG_LP = "svrg-lp"

    @property
    def geometric(self):
        return self in GEOMETRIC_KINDS


GEOMETRIC_KINDS = frozenset(
    {Kind.Q, Kind.E, Kind.NONADAPTIVE, Kind.NONADAPTIVE_F, Kind.NONADAPTIVE_G, Kind.SCSG}
)
ADAPTIVE_KINDS = frozenset({Kind.Q, Kind.E})


@dataclass(frozen=True)
class EpochParams:
    eta: float
    b: int
    m: float
    B: int
    inner_steps: int = None  # fixed inner-loop length; None means geometric

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.b < 1:
            raise ValueError(f"b must be >= 1, got {self.b}")
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.B < 0:
            raise ValueError(f"B must be >= 0, got {self.B}")

    @property
    def mean_steps(self):
        return self.m / self.b

    @property
    def lam(self):
        """``eta * m / b``, the per-epoch weight in the descent bound."""
        return self.eta * self.m / self.b

    def step_condition(self, L):
        """``2 eta L <= min(1, b / sqrt(m))``, with a relative rounding slack."""
        return 2.0 * self.eta * L <= min(1.0, self.b / math.sqrt(self.m)) * (1.0 + 1e-12)

    def batch_condition(self):
        """``b <= sqrt(m)``."""
        return self.b * self.b <= self.m


@lru_cache(maxsize=4096)
def _sqrt_rule(m, n, L, B):
    b = max(1, math.isqrt(int(m)))  # floor(sqrt(m)) == isqrt(floor(m))
    return EpochParams(eta=b / (2.0 * L * math.sqrt(m)), b=b, m=float(m), B=int(B))


def q_schedule(j, n, L):
    """Quadratic growth: ``m_j = B_j = min(j^2, n)``."""
    if j < 1 or n < 1 or not L > 0:
        raise ValueError(f"need j >= 1, n >= 1, L > 0; got j={j}, n={n}, L={L}")
    m = min(j * j, n)
    return _sqrt_rule(m, n, L, m)


def e_schedule(j, n, L, alpha=2.0):
    """Exponential growth: ``m_j = min(alpha^(2j), n)``, ``B_j = ceil(m_j)``."""
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if j < 1 or n < 1 or not L > 0:
        raise ValueError(f"need j >= 1, n >= 1, L > 0; got j={j}, n={n}, L={L}")
    log_m = 2 * j * math.log(alpha)
    m = float(n) if log_m >= math.log(n) else min(alpha ** (2 * j), float(n))
    B = min(math.ceil(m), n)
    return _sqrt_rule(m, n, L, B)


def nonadaptive_schedule(B, n, L):
    """Constant ``B_j = m_j = B``; pair with ``delta = 0``."""
    if not 1 <= B <= n:
        raise ValueError(f"need 1 <= B <= n, got B={B}, n={n}")
    return _sqrt_rule(B, n, L, B)


def nonadaptive_batch_fvalue(sigma2, mu, eps, n):
    """Big batch for an ``eps``-accurate function value: ``min(sigma2 / (4 mu eps^2), n)``."""
    if not (sigma2 >= 0 and mu > 0 and eps > 0):
        raise ValueError("need sigma2 >= 0, mu > 0, eps > 0")
    return int(max(1, min(math.ceil(sigma2 / (4.0 * mu * eps**2)), n)))


def nonadaptive_batch_gradnorm(sigma2, mu, eps, L, n):
    """Big batch for an ``eps``-stationary point.

    ``min(8 sigma2 / eps^2 + 8 sigma^(4/3) L^(2/3) / (eps^(4/3) mu^(2/3)), n)``.
    """
    if not (sigma2 >= 0 and mu > 0 and eps > 0 and L > 0):
        raise ValueError("need sigma2 >= 0, mu > 0, eps > 0, L > 0")
    B = 8.0 * sigma2 / eps**2 + 8.0 * sigma2 ** (2.0 / 3.0) * L ** (2.0 / 3.0) / (
        eps ** (4.0 / 3.0) * mu ** (2.0 / 3.0)
    )
    return int(max(1, min(math.ceil(B), n)))


def _ceil_two_thirds(n):
    """Exact ``ceil(n^(2/3))``: the least integer ``c`` with ``c^3 >= n^2``."""
    c = math.ceil(n ** (2.0 / 3.0))
    while c > 1 and (c - 1) ** 3 >= n * n:
        c -= 1
    while c**3 < n * n:
        c += 1
    return c


def baseline_schedule(kind, n, L, j=1, c_scsg=1.0, B_fixed=1024, sgd_batch=32):
    """Parameters of the comparison methods.

    ``sarah``: full-gradient anchor, ``ceil(sqrt n)`` steps of batch
    ``ceil(sqrt n)``, step ``1/(2L)``.  ``svrg``: full anchor,
    ``ceil(n/b)`` steps of batch ``b = ceil(n^(2/3))``, step ``1/(2L)``.
    ``scsg``: ``B = min(ceil(c j^(3/2)), n)``, ``b = floor(sqrt B)``,
    ``m = B``, geometric inner loop, step ``b / (2 L sqrt m)``.  ``sgd``:
    batch 32, step ``1/(2L)``; one "epoch" is ``ceil(n/b)`` steps.  The
    ``-lp`` variants anchor on a batch of ``B_fixed`` (capped at ``n``) and
    size their inner loop as if ``n`` were ``B_fixed``.

    For deterministic inner loops ``m`` is the query budget
    ``b * inner_steps``.
    """
    kind = Kind(kind)
    if n < 1 or not L > 0:
        raise ValueError(f"need n >= 1, L > 0; got n={n}, L={L}")
    half = 1.0 / (2.0 * L)
    if kind in (Kind.SARAH, Kind.SARAH_LP):
        B = n if kind is Kind.SARAH else min(B_fixed, n)
        b = min(math.isqrt(B - 1) + 1, n)  # ceil(sqrt(B))
        return EpochParams(eta=half, b=b, m=float(b * b), B=B, inner_steps=b)
    if kind in (Kind.SVRG, Kind.SVRG_LP):
        B = n if kind is Kind.SVRG else min(B_fixed, n)
        b = min(_ceil_two_thirds(B), n)
        steps = -(-B // b)
        return EpochParams(eta=half, b=b, m=float(b * steps), B=B, inner_steps=steps)
    if kind is Kind.SCSG:
        B = int(min(math.ceil(c_scsg * j**1.5), n))
        B = max(B, 1)
        return _sqrt_rule(B, n, L, B)
    if kind is Kind.SGD:
        b = min(sgd_batch, n)
        steps = -(-n // b)
        return EpochParams(eta=half, b=b, m=float(b * steps), B=0, inner_steps=steps)
    raise ValueError(f"{kind.value} is not a baseline kind")


# kinds whose parameters do not depend on the epoch index
FIXED_KINDS = frozenset({Kind.NONADAPTIVE, Kind.NONADAPTIVE_F, Kind.NONADAPTIVE_G, Kind.SARAH,
                         Kind.SVRG, Kind.SGD, Kind.SARAH_LP, Kind.SVRG_LP})


@lru_cache(maxsize=512)
def _fixed_params(kind, n, L, B_fixed, sgd_batch):
    if kind in (Kind.NONADAPTIVE, Kind.NONADAPTIVE_F, Kind.NONADAPTIVE_G):
        return nonadaptive_schedule(min(B_fixed, n), n, L)
    return baseline_schedule(kind, n, L, B_fixed=B_fixed, sgd_batch=sgd_batch)


@dataclass(frozen=True)
class Schedule:
    """A schedule kind plus its constants; ``params(j, n, L)`` gives epoch ``j``.

    ``delta`` defaults per kind: 1 for Q, 0.5 for E, 0 otherwise.
    """

    kind: Kind
    delta: float = None
    alpha: float = 2.0
    B_fixed: int = 1024
    c_scsg: float = 1.0
    sgd_batch: int = 32

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.delta is None:
            default = {Kind.Q: 1.0, Kind.E: 0.5}.get(kind, 0.0)
            object.__setattr__(self, "delta", default)
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if kind is Kind.E and not (self.alpha > 1 and self.delta > 0):
            raise ValueError("E-Geom-SARAH needs alpha > 1 and delta in (0, 1]")
        if kind in (Kind.NONADAPTIVE, Kind.NONADAPTIVE_F, Kind.NONADAPTIVE_G) and self.delta != 0:
            raise ValueError("non-adaptive Geom-SARAH runs with delta = 0")
        if self.B_fixed < 1 or self.sgd_batch < 1 or not self.c_scsg > 0:
            raise ValueError("B_fixed, sgd_batch and c_scsg must be positive")

    @classmethod
    def nonadaptive_f(cls, sigma2, mu, eps, n):
        return cls(Kind.NONADAPTIVE_F, B_fixed=nonadaptive_batch_fvalue(sigma2, mu, eps, n))

    @classmethod
    def nonadaptive_g(cls, sigma2, mu, eps, L, n):
        return cls(Kind.NONADAPTIVE_G, B_fixed=nonadaptive_batch_gradnorm(sigma2, mu, eps, L, n))

    def params(self, j, n, L):
        k = self.kind
        if k is Kind.Q:
            return q_schedule(j, n, L)
        if k is Kind.E:
            return e_schedule(j, n, L, self.alpha)
        if k in FIXED_KINDS:
            if j < 1:
                raise ValueError(f"need j >= 1, got j={j}")
            return _fixed_params(k, n, L, self.B_fixed, self.sgd_batch)
        return baseline_schedule(k, n, L, j, c_scsg=self.c_scsg)

    def with_delta(self, delta):
        return replace(self, delta=delta)

    def describe(self):
        k = self.kind
        parts = [k.value, f"delta={self.delta:g}"]
        if k is Kind.E:
            parts.append(f"alpha={self.alpha:g}")
        if k is Kind.SCSG:
            parts.append(f"c={self.c_scsg:g}")
        if k in (Kind.SARAH_LP, Kind.SVRG_LP, Kind.NONADAPTIVE, Kind.NONADAPTIVE_F,
                 Kind.NONADAPTIVE_G):
            parts.append(f"B={self.B_fixed}")
        if k is Kind.SGD:
            parts.append(f"b={self.sgd_batch}")
        return " ".join(parts)
