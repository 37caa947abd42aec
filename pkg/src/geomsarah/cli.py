"""Command line: ``geomsarah run | check | plot``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
runtime failures (divergence, I/O, unreadable data).
"""

import argparse
import sys
from dataclasses import replace

from .bench import ConfigError, ExperimentConfig, MethodSpec, read_csv, run_experiment
from .data import LibSVMParseError
from .optimizers import DivergenceError
from .schedules import Kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} is not an unsigned 64-bit integer")
    return v


def build_parser():
    p = _Parser(prog="geomsarah", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a method x seed grid and write results.csv")
    r.add_argument("--config", help="JSON experiment config; inline flags override it")
    r.add_argument("--data", help="LibSVM dataset path")
    r.add_argument("--synthetic", metavar="N,D,SEED[,SEP]",
                   help="use a synthetic dataset instead of --data")
    r.add_argument("--method", action="append",
                   help=f"method descriptor, repeatable ({', '.join(k.value for k in Kind)}); "
                        "options as name:key=val,...")
    r.add_argument("--lambda", dest="lam", type=float, help="penalty weight (default 0.1)")
    r.add_argument("--epochs", type=int, help="outer epochs T per method")
    r.add_argument("--budget", type=float, help="stop each run at BUDGET * n IFO queries")
    r.add_argument("--seed", type=_seed, action="append", help="run seed, repeatable")
    r.add_argument("--delta", type=float, help="tail fraction for the Geom-SARAH methods")
    r.add_argument("--alpha", type=float, help="growth base for e-geom-sarah")
    r.add_argument("--n-features", type=int, help="pad the feature dimension up to this")
    r.add_argument("--out", help="output directory")
    r.add_argument("--plots", action="store_true", help="also write SVG plots")
    r.add_argument("--quiet", action="store_true")

    sub.add_parser("check", help="run the statistical self-test suite")

    pl = sub.add_parser("plot", help="render a results CSV as SVG")
    pl.add_argument("csv", help="results.csv written by 'run'")
    pl.add_argument("--metric", choices=("f_value", "grad_norm_sq"), default="grad_norm_sq")
    pl.add_argument("--out", required=True, help="SVG output path")
    pl.add_argument("--title")
    return p


def _config_from_args(args):
    doc = {}
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        doc = {"dataset": cfg.dataset, "methods": cfg.methods, "epochs": cfg.T,
               "seeds": cfg.seeds, "out_dir": cfg.out_dir, "lambda": cfg.lam,
               "budget": cfg.budget, "plots": cfg.emit_plots, "n_features": cfg.n_features}
    if args.data and args.synthetic:
        raise ConfigError("give either --data or --synthetic, not both")
    if args.data:
        doc["dataset"] = args.data
    if args.synthetic:
        parts = args.synthetic.split(",")
        try:
            n, d, seed = (int(v) for v in parts[:3])
            sep = float(parts[3]) if len(parts) > 3 else 1.0
        except ValueError:
            raise ConfigError(f"bad --synthetic {args.synthetic!r}; expected N,D,SEED[,SEP]") from None
        doc["dataset"] = {"synthetic": {"n": n, "d": d, "seed": seed, "separation": sep}}
    if args.method:
        doc["methods"] = list(args.method)
    for key, val in (("lambda", args.lam), ("epochs", args.epochs), ("budget", args.budget),
                     ("out_dir", args.out), ("n_features", args.n_features)):
        if val is not None:
            doc[key] = val
    if args.seed:
        doc["seeds"] = args.seed
    if args.plots:
        doc["plots"] = True
    doc.setdefault("seeds", [0])
    if doc.get("epochs") is None and doc.get("budget") is None:
        raise ConfigError("missing --epochs (or --budget, or a --config that sets one)")
    for key, flag in (("dataset", "--data"), ("methods", "--method"), ("out_dir", "--out")):
        if key not in doc:
            raise ConfigError(f"missing {flag} (or a --config that sets {key!r})")
    methods = []
    for m in doc["methods"]:
        if not isinstance(m, (str, dict)):
            methods.append(m)
            continue
        spec = MethodSpec.parse(m)
        kind = spec.schedule.kind
        overrides = {}
        if args.delta is not None and kind in (Kind.Q, Kind.E):
            overrides["delta"] = args.delta
        if args.alpha is not None and kind is Kind.E:
            overrides["alpha"] = args.alpha
        if overrides:
            try:
                spec = MethodSpec(replace(spec.schedule, **overrides), spec.label)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        methods.append(spec)
    doc["methods"] = methods
    return ExperimentConfig.from_dict(doc)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check":
        from .selfcheck import run_all
        return 0 if run_all() else 2

    if args.command == "plot":
        from .plot import emit_plot
        try:
            emit_plot(read_csv(args.csv), args.metric, args.out, title=args.title)
        except (OSError, ValueError) as exc:
            print(f"geomsarah plot: {exc}", file=sys.stderr)
            return 2
        return 0

    try:
        cfg = _config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"geomsarah run: {exc}", file=sys.stderr)
        return 1
    log = None if args.quiet else (lambda s: print(s, file=sys.stderr))
    try:
        run_experiment(cfg, log=log)
    except (DivergenceError, LibSVMParseError, OSError) as exc:
        print(f"geomsarah run: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # parameters that only fail against the data, e.g. a fixed batch larger than n
        print(f"geomsarah run: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
