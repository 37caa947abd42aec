"""Experiment grids (method x seed) on one dataset, with CSV output.

A config is a JSON document::

    {
      "dataset": "data/mushrooms",
      "lambda": 0.1,
      "methods": ["q-geom-sarah", {"name": "e-geom-sarah", "alpha": 2}, "sgd"],
      "epochs": 30,
      "seeds": [1, 2, 3],
      "out_dir": "out",
      "plots": true
    }

Keys:

``dataset``
    LibSVM path (relative to the working directory), or
    ``{"synthetic": {"n": 1000, "d": 20, "seed": 1, "separation": 1.0}}``.
``lambda``
    Penalty weight, default 0.1.
``methods``
    Non-empty list of method entries, see below.
``epochs``
    Outer epochs ``T`` per run.  Optional when ``budget`` is set.
``budget``
    Optional.  Run every method until it has spent ``budget * n`` IFO
    queries; ``epochs`` is then ignored.
``seeds``
    Unsigned 64-bit run seeds.
``out_dir``
    Directory for ``results.csv`` (created if missing).
``plots``
    Also write ``f_value.svg`` and ``grad_norm_sq.svg``.  Default false.
``n_features``
    Optional.  Pad the feature dimension of a LibSVM file up to this.

Method entries are a name or an object with ``name`` and any of ``delta``,
``alpha``, ``B`` (big batch of non-adaptive and low-precision kinds),
``c`` (SCSG growth constant), ``batch`` (SGD batch) and ``label`` (the text
written to the ``method`` column).  A string ``"e-geom-sarah:alpha=1.5"``
is shorthand for the object form.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .data import load_libsvm, synth_logistic
from .objective import LogisticNcvx
from .optimizers import run
from .schedules import Kind, Schedule

CSV_HEADER = (
    "method",
    "seed",
    "epoch",
    "ifo_cumulative",
    "epochs_equivalent",
    "f_value",
    "grad_norm_sq",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MethodSpec:
    schedule: Schedule
    label: str

    @classmethod
    def parse(cls, entry):
        if isinstance(entry, str):
            name, _, rest = entry.partition(":")
            entry = {"name": name}
            for item in filter(None, rest.split(",")):
                key, eq, val = item.partition("=")
                if not eq:
                    raise ConfigError(f"bad method option {item!r} in {name!r}")
                entry[key.strip()] = val.strip()
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"method entry needs a name: {entry!r}")
        entry = dict(entry)
        name = str(entry.pop("name"))
        label = str(entry.pop("label", name))
        keys = {"delta": ("delta", float), "alpha": ("alpha", float), "B": ("B_fixed", int),
                "c": ("c_scsg", float), "batch": ("sgd_batch", int)}
        kwargs = {}
        for key, val in entry.items():
            if key not in keys:
                raise ConfigError(f"unknown option {key!r} for method {name!r}")
            attr, conv = keys[key]
            try:
                kwargs[attr] = conv(val)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value {val!r} for {key!r} in method {name!r}") from None
        try:
            schedule = Schedule(Kind(name), **kwargs)
        except ValueError as exc:
            known = ", ".join(k.value for k in Kind)
            msg = str(exc) if name in {k.value for k in Kind} else f"unknown method {name!r} (known: {known})"
            raise ConfigError(msg) from None
        return cls(schedule, label)


@dataclass
class ExperimentConfig:
    dataset: object
    methods: list
    T: int
    seeds: list
    out_dir: str
    lam: float = 0.1
    budget: float = None
    emit_plots: bool = False
    n_features: int = None

    def __post_init__(self):
        self.methods = [m if isinstance(m, MethodSpec) else MethodSpec.parse(m) for m in self.methods]
        if not self.methods:
            raise ConfigError("no methods given")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"method labels must be unique, got {labels}")
        if not isinstance(self.T, int) or self.T < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.T!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        self.seeds = [int(s) for s in self.seeds]
        if any(s < 0 or s >= 2**64 for s in self.seeds):
            raise ConfigError("seeds must be unsigned 64-bit integers")
        if not (isinstance(self.lam, (int, float)) and self.lam >= 0):
            raise ConfigError(f"lambda must be >= 0, got {self.lam!r}")
        if self.budget is not None and not self.budget > 0:
            raise ConfigError(f"budget must be positive, got {self.budget!r}")

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        known = {"dataset", "lambda", "methods", "epochs", "budget", "seeds", "out_dir",
                 "plots", "n_features"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("dataset", "methods", "seeds", "out_dir"):
            if key not in doc:
                raise ConfigError(f"config is missing {key!r}")
        if doc.get("epochs") is None and doc.get("budget") is None:
            raise ConfigError("config needs 'epochs' or 'budget'")
        return cls(
            dataset=doc["dataset"],
            methods=list(doc["methods"]),
            T=doc["epochs"] if doc.get("epochs") is not None else 1,
            seeds=list(doc["seeds"]),
            out_dir=doc["out_dir"],
            lam=doc.get("lambda", 0.1),
            budget=doc.get("budget"),
            emit_plots=bool(doc.get("plots", False)),
            n_features=doc.get("n_features"),
        )

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc)

    def load_dataset(self):
        ds = self.dataset
        if isinstance(ds, dict):
            if set(ds) != {"synthetic"}:
                raise ConfigError(f"dataset object must be {{'synthetic': {{...}}}}, got {ds!r}")
            spec = dict(ds["synthetic"])
            try:
                return synth_logistic(int(spec["n"]), int(spec["d"]), int(spec.get("seed", 0)),
                                      float(spec.get("separation", 1.0)))
            except KeyError as exc:
                raise ConfigError(f"synthetic dataset needs {exc.args[0]!r}") from None
        return load_libsvm(str(ds), n_features=self.n_features)


class ResultRow(NamedTuple):
    method: str
    seed: int
    epoch: int
    ifo_cumulative: int
    epochs_equivalent: float
    f_value: float
    grad_norm_sq: float


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    def sort(self):
        self.rows.sort(key=lambda r: (r.method, r.seed, r.epoch))
        return self

    def methods(self):
        seen = []
        for r in self.rows:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def select(self, method):
        return [r for r in self.rows if r.method == method]

    def final(self, method, seed):
        rows = [r for r in self.rows if r.method == method and r.seed == seed]
        return max(rows, key=lambda r: r.epoch)

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, ResultTable) and self.rows == other.rows


def trace_rows(trace, method):
    return [
        ResultRow(method, int(trace.seed), r.epoch, r.ifo_cumulative,
                  r.ifo_cumulative / trace.n, r.f_value, r.grad_norm_sq)
        for r in trace.records
    ]


def _fmt(v):
    return f"{v:.17g}"


def emit_csv(rt, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rt.rows:
            w.writerow([r.method, r.seed, r.epoch, r.ifo_cumulative,
                        _fmt(r.epochs_equivalent), _fmt(r.f_value), _fmt(r.grad_norm_sq)])


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [
            ResultRow(m, int(s), int(e), int(ifo), float(eq), float(f), float(g))
            for m, s, e, ifo, eq, f, g in reader
        ]
    return ResultTable(rows)


def run_experiment(cfg, log=None):
    """Run every (method, seed) pair of ``cfg`` and write ``results.csv``.

    Plots ``f_value.svg`` and ``grad_norm_sq.svg`` are added when
    ``cfg.emit_plots`` is set.
    """
    from .plot import emit_plot

    ds = cfg.load_dataset()
    obj = LogisticNcvx(ds, cfg.lam)
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, "results.csv")
    if not os.access(cfg.out_dir, os.W_OK):
        raise PermissionError(f"output directory {cfg.out_dir!r} is not writable")
    max_ifo = None if cfg.budget is None else math.ceil(cfg.budget * ds.n)
    x0 = np.zeros(ds.d)
    table = ResultTable()
    for spec in cfg.methods:
        for seed in cfg.seeds:
            # every epoch costs >= 1 query, so T = max_ifo never binds before the budget
            T = cfg.T if max_ifo is None else max_ifo
            trace = run(obj, spec.schedule, T, x0, seed, max_ifo=max_ifo)
            table.rows.extend(trace_rows(trace, spec.label))
            if log is not None:
                f = trace.final
                log(f"{spec.label} seed={seed}: {len(trace.records) - 1} epochs, "
                    f"ifo={f.ifo_cumulative}, f={f.f_value:.6g}, |g|^2={f.grad_norm_sq:.3g}")
    table.sort()
    emit_csv(table, csv_path)
    if cfg.emit_plots:
        order = [m.label for m in cfg.methods]
        for metric in ("f_value", "grad_norm_sq"):
            emit_plot(table, metric, os.path.join(cfg.out_dir, f"{metric}.svg"), order=order)
    return table
