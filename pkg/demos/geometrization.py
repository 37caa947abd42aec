"""The geometric epoch length, numerically.

For N ~ Geom with mean m/b the identity
    E[D_N - D_{N+1}] = (b/m) (D_0 - E[D_N])
holds for any sequence with finite expectation.  Below it is checked by
Monte Carlo for a few sequences, then the effect on an actual epoch is shown:
the expected cost B + 2b E[N] = B + 2m.

    python3 demos/geometrization.py
"""

import numpy as np

from geomsarah import (
    EpochParams,
    LogisticNcvx,
    RngStream,
    geom_sample,
    geom_sarah_epoch,
    geometrization_identity_check,
    synth_logistic,
)

rng = RngStream(2024)

print("identity check, 1e6 draws")
sequences = {
    "k^2": lambda k: np.asarray(k, dtype=float) ** 2,
    "0.9^k": lambda k: 0.9 ** np.asarray(k, dtype=float),
    "log(1+k)": lambda k: np.log1p(k),
}
for i, (name, D) in enumerate(sequences.items()):
    for mean in (1.0, 4.0, 25.0):
        res = geometrization_identity_check(D, mean, 10**6, rng.child(i, int(mean)))
        z = (res.lhs_estimate - res.rhs_exact) / res.std_err
        print(f"  {name:>9} mean={mean:>4g}  mc={res.lhs_estimate:+.5f}  "
              f"exact={res.rhs_exact:+.5f}  z={z:+.2f}")

# epoch lengths: heavy right tail, mode at zero
N = geom_sample(rng.child(10), 9.0, size=10**5)
print(f"\nN with mean 9: sample mean {N.mean():.3f}, P(N=0) {np.mean(N == 0):.4f} "
      f"(exact {1 / 10:.4f}), 99th percentile {np.percentile(N, 99):.0f}")

obj = LogisticNcvx(synth_logistic(200, 5, 3), 0.1)
p = EpochParams(eta=1 / (2 * obj.L), b=4, m=16.0, B=16)
x0 = np.zeros(obj.d)
costs = [geom_sarah_epoch(obj, x0, p, rng.child(20, r)).ifo_cost for r in range(5000)]
print(f"epoch cost with B=16, b=4, m=16: mean {np.mean(costs):.2f} (expected {p.B + 2 * p.m:g})")
