"""Compare Geom-SARAH against the baselines on a fixed IFO budget.

Uses the mushrooms LibSVM file when GEOMSARAH_MUSHROOMS points at it,
otherwise a synthetic problem of the same shape.  Writes results.csv and
two SVG plots under demos/out/compare.

    python3 demos/compare_methods.py
"""

import os

from geomsarah.bench import ExperimentConfig, run_experiment

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "out", "compare")

dataset = os.environ.get("GEOMSARAH_MUSHROOMS")
if not dataset or not os.path.exists(dataset):
    dataset = {"synthetic": {"n": 8124, "d": 112, "seed": 1}}

cfg = ExperimentConfig(
    dataset=dataset,
    methods=["q-geom-sarah", "e-geom-sarah", "sarah", "svrg", "scsg", "sgd"],
    T=1,
    seeds=[1, 2, 3],
    out_dir=OUT,
    budget=30,
    emit_plots=True,
)
table = run_experiment(cfg, log=print)

# seed-averaged final |grad f|^2 per method
print()
for method in table.methods():
    finals = [table.final(method, s).grad_norm_sq for s in cfg.seeds]
    print(f"{method:>14}  {sum(finals) / len(finals):.3e}")
print(f"\nwrote {OUT}")
