"""Geom-SARAH and the baseline optimizers, with exact IFO accounting.

One IFO query is one per-sample gradient evaluation ``grad f_i(x)``.  All
optimizer gradients go through :class:`CountingOracle`; the metrics stored
in the trace (``f`` and ``|grad f|^2`` at every epoch end) use exact full
passes that are not counted.

Randomness layout for a run with seed ``s``: epoch ``j >= 1`` draws from
``RngStream(s).child(j)``, in order the big batch, the geometric inner-loop
length (geometric kinds only) and then one mini-batch per inner step.  The
output index is drawn from ``RngStream(s).child(0)``.  Changing ``T``
therefore never perturbs the randomness of earlier epochs.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .rand import RngStream, TailDistribution, geom_sample, sample_without_replacement, tail_index
from .schedules import EpochParams, Kind, Schedule


class DivergenceError(FloatingPointError):
    """A non-finite iterate or metric was produced."""

    def __init__(self, epoch, what="iterate"):
        self.epoch = epoch
        super().__init__(f"non-finite {what} at epoch {epoch}; try a smaller step size")


class CountingOracle:
    """Wraps an objective and counts per-sample gradient queries."""

    def __init__(self, obj):
        self.obj = obj
        self.count = 0

    def grad_batch(self, idx, x):
        self.count += len(idx)
        return self.obj.grad_batch(idx, x)

    def grad_index(self, i, x, out=None):
        self.count += 1
        return self.obj.grad_index(i, x, out)


class EpochResult(NamedTuple):
    x: np.ndarray
    n_steps: int
    ifo_cost: int


def _epoch(obj, x_in, p, rng, estimator="sarah", oracle=None, callback=None):
    """One outer iteration: big-batch anchor, then ``N`` inner steps.

    ``estimator`` is ``"sarah"`` (recursive) or ``"svrg"`` (anchored at the
    epoch start).  ``callback(k, x_k, v_k)`` sees every estimate, including
    the final unused one.
    """
    if oracle is None:
        oracle = CountingOracle(obj)
    start = oracle.count
    n = obj.n
    x = np.array(x_in, dtype=np.float64)
    J = sample_without_replacement(rng, n, p.B)
    v = oracle.grad_batch(J, x)
    if p.inner_steps is None:
        N = geom_sample(rng, p.m / p.b)
    else:
        N = p.inner_steps
    if callback is not None:
        callback(0, x, v)
    x_anchor, v_anchor = x, v
    for k in range(N):
        x_next = x - p.eta * v
        I = sample_without_replacement(rng, n, p.b)
        if estimator == "sarah":
            v = oracle.grad_batch(I, x_next) - oracle.grad_batch(I, x) + v
        else:
            v = oracle.grad_batch(I, x_next) - oracle.grad_batch(I, x_anchor) + v_anchor
        x = x_next
        if callback is not None:
            callback(k + 1, x, v)
    return EpochResult(x, N, oracle.count - start)


def geom_sarah_epoch(obj, x_in, p, rng, oracle=None, callback=None):
    """Geom-SARAH outer iteration with parameters ``p`` and stream ``rng``.

    Returns ``(x_out, N, ifo_cost)`` with ``ifo_cost == p.B + 2 * p.b * N``.
    """
    return _epoch(obj, x_in, p, rng, "sarah", oracle, callback)


@dataclass
class EpochRecord:
    epoch: int
    n_steps: int
    ifo_cumulative: int
    f_value: float
    grad_norm_sq: float
    eta: float = None
    b: int = None
    m: float = None
    B: int = None


@dataclass
class RunTrace:
    records: list
    output_index: int
    output_iterate: np.ndarray
    seed: int
    schedule_descriptor: str
    n: int
    snapshots: dict = field(default_factory=dict, repr=False)

    @property
    def final(self):
        return self.records[-1]

    @property
    def ifo_total(self):
        return self.records[-1].ifo_cumulative


def _n_epochs(T, delta):
    # ceil((1 + delta) T) robust to 1.1 * 10 == 11.000000000000002
    x = (1.0 + delta) * T
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 * max(1.0, x) else math.ceil(x)


def _metrics(obj, x, epoch):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(epoch)
    g = obj.full_grad(x)
    f = obj.value(x)
    gn = float(g @ g)
    if not (math.isfinite(f) and math.isfinite(gn)):
        raise DivergenceError(epoch, "metric")
    return f, gn


def _run(obj, schedule, T, x0, seed, max_ifo, estimator):
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    x = np.array(x0, dtype=np.float64)
    if x.shape != (obj.d,):
        raise ValueError(f"x0 must have length {obj.d}, got shape {x.shape}")
    root = RngStream(seed)
    oracle = CountingOracle(obj)
    f, gn = _metrics(obj, x, 0)
    records = [EpochRecord(0, 0, 0, f, gn)]
    last = _n_epochs(T, schedule.delta)
    snapshots, weights = {}, {}
    j = 0
    for j in range(1, last + 1):
        p = schedule.params(j, obj.n, obj.L)
        x, N, _ = _epoch(obj, x, p, root.child(j), estimator, oracle)
        f, gn = _metrics(obj, x, j)
        records.append(EpochRecord(j, N, oracle.count, f, gn, p.eta, p.b, p.m, p.B))
        if j >= T:
            snapshots[j] = x.copy()
            weights[j] = p.eta * p.m
        if max_ifo is not None and oracle.count >= max_ifo:
            break
    if j < T:
        # budget ran out before the tail window: the last iterate is the output
        snapshots = {j: x.copy()}
        td = TailDistribution.point_mass(j)
    else:
        td = TailDistribution(T, [weights[i] for i in range(T, j + 1)])
    R = tail_index(root.child(0), td)
    return RunTrace(
        records=records,
        output_index=R,
        output_iterate=snapshots[R],
        seed=seed,
        schedule_descriptor=schedule.describe(),
        n=obj.n,
        snapshots=snapshots,
    )


def run_geom_sarah(obj, schedule, T, x0, seed, max_ifo=None):
    """Run ``ceil((1 + delta) T)`` Geom-SARAH epochs and draw the output iterate.

    The output index ``R`` is drawn on ``[T, ceil((1 + delta) T)]`` with
    probability proportional to ``eta_j * m_j``.  If ``max_ifo`` is given the
    run stops after the first epoch that reaches it and the window is clipped
    to the epochs actually run.
    """
    schedule = schedule if isinstance(schedule, Schedule) else Schedule(schedule)
    if schedule.kind not in (Kind.Q, Kind.E, Kind.NONADAPTIVE, Kind.NONADAPTIVE_F,
                             Kind.NONADAPTIVE_G):
        raise ValueError(f"{schedule.kind.value} is not a Geom-SARAH schedule")
    return _run(obj, schedule, T, x0, seed, max_ifo, "sarah")


def _run_sgd(obj, schedule, T, x0, seed, max_ifo):
    x = np.array(x0, dtype=np.float64)
    if x.shape != (obj.d,):
        raise ValueError(f"x0 must have length {obj.d}, got shape {x.shape}")
    root = RngStream(seed)
    oracle = CountingOracle(obj)
    f, gn = _metrics(obj, x, 0)
    records = [EpochRecord(0, 0, 0, f, gn)]
    j = 0
    for j in range(1, T + 1):
        p = schedule.params(j, obj.n, obj.L)
        batches = root.child(j)
        for _ in range(p.inner_steps):
            I = sample_without_replacement(batches, obj.n, p.b)
            x = x - p.eta * oracle.grad_batch(I, x)
        f, gn = _metrics(obj, x, j)
        records.append(EpochRecord(j, p.inner_steps, oracle.count, f, gn, p.eta, p.b, p.m, p.B))
        if max_ifo is not None and oracle.count >= max_ifo:
            break
    R = tail_index(root.child(0), TailDistribution.point_mass(j))
    return RunTrace(records, R, x.copy(), seed, schedule.describe(), obj.n, {j: x.copy()})


def run_baseline(obj, schedule, T, x0, seed, max_ifo=None):
    """Run a comparison method for ``T`` epochs (or until ``max_ifo``).

    ``sarah``/``sarah-lp`` use the recursive estimator with a fixed inner
    length; ``svrg``/``svrg-lp`` and ``scsg`` use the estimator anchored at
    the epoch start; ``sgd`` takes plain mini-batch steps and records once
    per ``ceil(n/b)`` steps.  Baselines output their last iterate.
    """
    schedule = schedule if isinstance(schedule, Schedule) else Schedule(schedule)
    kind = schedule.kind
    if schedule.delta != 0:
        raise ValueError("baselines output the last iterate; delta must be 0")
    if kind is Kind.SGD:
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        return _run_sgd(obj, schedule, T, x0, seed, max_ifo)
    if kind in (Kind.SARAH, Kind.SARAH_LP):
        return _run(obj, schedule, T, x0, seed, max_ifo, "sarah")
    if kind in (Kind.SVRG, Kind.SVRG_LP, Kind.SCSG):
        return _run(obj, schedule, T, x0, seed, max_ifo, "svrg")
    raise ValueError(f"{kind.value} is not a baseline method")


def run(obj, schedule, T, x0, seed, max_ifo=None):
    """Dispatch to :func:`run_geom_sarah` or :func:`run_baseline`."""
    schedule = schedule if isinstance(schedule, Schedule) else Schedule(schedule)
    if schedule.kind in (Kind.Q, Kind.E, Kind.NONADAPTIVE, Kind.NONADAPTIVE_F,
                         Kind.NONADAPTIVE_G):
        return run_geom_sarah(obj, schedule, T, x0, seed, max_ifo)
    return run_baseline(obj, schedule, T, x0, seed, max_ifo)


def ifo_identity(trace):
    """``sum_j (B_j + 2 b_j N_j)`` over the epochs of an epoch-structured run."""
    return sum(r.B + 2 * r.b * r.n_steps for r in trace.records[1:])


class Theorem1Check(NamedTuple):
    lhs: float
    rhs: float
    passed: bool
    lhs_se: float
    rhs_se: float
    sigma2: float


def theorem1_statistical_check(obj, p, replicates, rng, x0=None, n_sigmas=3.0):
    """Monte-Carlo check of the one-epoch descent bound.

    Runs ``replicates`` independent Geom-SARAH epochs from the same start
    ``x0`` (zero by default) and compares the mean of ``|grad f(x_out)|^2``
    with

        (2 b / (eta m)) * mean(f(x0) - f(x_out)) + sigma2 * [B < n] / B,

    where ``sigma2`` is the largest exact population gradient variance over
    ``x0`` and every ``x_out`` visited.  Passes when
    ``lhs <= rhs + n_sigmas * sqrt(lhs_se^2 + rhs_se^2)``.
    """
    if not p.step_condition(obj.L):
        raise ValueError("epoch parameters violate 2 eta L <= min(1, b / sqrt(m))")
    x0 = np.zeros(obj.d) if x0 is None else np.asarray(x0, dtype=np.float64)
    f0 = obj.value(x0)
    gsq = np.empty(replicates)
    fdrop = np.empty(replicates)
    sigma2 = obj.grad_variance(x0)
    for r in range(replicates):
        x, _, _ = geom_sarah_epoch(obj, x0, p, rng.child(r))
        g = obj.full_grad(x)
        gsq[r] = g @ g
        fdrop[r] = f0 - obj.value(x)
        sigma2 = max(sigma2, obj.grad_variance(x))
    scale = 2.0 * p.b / (p.eta * p.m)
    var_term = sigma2 / p.B if p.B < obj.n else 0.0
    lhs = float(gsq.mean())
    rhs = float(scale * fdrop.mean() + var_term)
    if replicates > 1:
        lhs_se = float(gsq.std(ddof=1) / math.sqrt(replicates))
        rhs_se = float(scale * fdrop.std(ddof=1) / math.sqrt(replicates))
    else:
        lhs_se = rhs_se = 0.0
    passed = lhs <= rhs + n_sigmas * math.hypot(lhs_se, rhs_se)
    return Theorem1Check(lhs, rhs, passed, lhs_se, rhs_se, sigma2)
