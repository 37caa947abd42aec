"""Deterministic self-test run by ``geomsarah check``."""

import math
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .data import synth_logistic
from .objective import LogisticNcvx
from .optimizers import theorem1_statistical_check
from .rand import (
    RngStream,
    TailDistribution,
    geom_sample,
    geometrization_identity_check,
    sample_without_replacement,
    tail_index,
)
from .schedules import q_schedule

SEED = 20240531
# absolute slack for rounding in the series sum; needed when D_k = k, where
# D_N - D_{N+1} is constant and the standard error is exactly zero
IDENTITY_FLOOR = 1e-12


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def check_geom_sampler(draws=200_000):
    rng = RngStream(SEED, 1)
    out = []
    for mean in (0.5, 1.0, 9.0):
        N = geom_sample(rng.child(int(mean * 10)), mean, size=draws)
        g = mean / (1 + mean)
        se = math.sqrt(g / (1 - g) ** 2 / draws)
        z = (N.mean() - mean) / se
        out.append(CheckResult(f"geometric mean={mean:g}", abs(z) < 4,
                               f"sample mean {N.mean():.5f}, z={z:+.2f}"))
    return out


def check_subset_sampler(draws=60_000):
    rng = RngStream(SEED, 2)
    subsets = list(combinations(range(4), 2))
    counts = dict.fromkeys(subsets, 0)
    for r in range(draws):
        s = tuple(sorted(sample_without_replacement(rng, 4, 2).tolist()))
        counts[s] += 1
    worst = max(abs(c / draws - 1 / 6) for c in counts.values())
    return [CheckResult("subset sampler M=4 k=2", worst < 0.01, f"max |freq - 1/6| = {worst:.4f}")]


def check_tail_law(draws=30_000):
    rng = RngStream(SEED, 3)
    td = TailDistribution(7, [1.0, 3.0])
    hits = sum(tail_index(rng, td) == 8 for _ in range(draws))
    p = hits / draws
    return [CheckResult("tail index weights [1,3]", abs(p - 0.75) < 0.01, f"P(8) = {p:.4f}")]


IDENTITY_SEQUENCES = {
    "k": lambda k: np.asarray(k, dtype=np.float64),
    "k^2": lambda k: np.asarray(k, dtype=np.float64) ** 2,
    "0.9^k": lambda k: 0.9 ** np.asarray(k, dtype=np.float64),
}


def check_identity(draws=1_000_000, means=(1.0, 4.0, 25.0)):
    rng = RngStream(SEED, 4)
    out = []
    for name, D in IDENTITY_SEQUENCES.items():
        for i, mean in enumerate(means):
            res = geometrization_identity_check(D, mean, draws, rng.child(len(out)))
            gap = abs(res.lhs_estimate - res.rhs_exact)
            ok = gap < 3 * res.std_err + IDENTITY_FLOOR
            out.append(CheckResult(
                f"geometrization D={name} mean={mean:g}", ok,
                f"lhs {res.lhs_estimate:.6f} rhs {res.rhs_exact:.6f} se {res.std_err:.2e}"))
    return out


def check_gradients(cases=100, h=1e-6):
    ds = synth_logistic(100, 10, 3, 1.0)
    obj = LogisticNcvx(ds, 0.1)
    rng = RngStream(SEED, 5)
    worst = 0.0
    for c in range(cases):
        r = rng.child(c)
        x = r.normal(obj.d)
        i = r.below(obj.n)
        g = obj.grad_index(i, x)
        fd = np.empty(obj.d)
        for j in range(obj.d):
            e = np.zeros(obj.d)
            e[j] = h
            fd[j] = (obj.value_index(i, x + e) - obj.value_index(i, x - e)) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12))
    return [CheckResult("gradient vs finite differences", worst < 1e-5,
                        f"max relative error {worst:.2e} over {cases} cases")]


def check_theorem1(replicates=2000):
    ds = synth_logistic(100, 5, 11, 1.0)
    obj = LogisticNcvx(ds, 0.1)
    p = q_schedule(3, obj.n, obj.L)
    res = theorem1_statistical_check(obj, p, replicates, RngStream(SEED, 6))
    return [CheckResult("one-epoch descent bound", res.passed,
                        f"lhs {res.lhs:.5g} <= rhs {res.rhs:.5g} "
                        f"(se {math.hypot(res.lhs_se, res.rhs_se):.2g})")]


def run_all(print_fn=print):
    results = []
    for fn in (check_geom_sampler, check_subset_sampler, check_tail_law, check_identity,
               check_gradients, check_theorem1):
        for res in fn():
            results.append(res)
            print_fn(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    n_fail = sum(not r.passed for r in results)
    print_fn(f"{len(results) - n_fail}/{len(results)} checks passed")
    return n_fail == 0
