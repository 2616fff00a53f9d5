"""Command-line interface.

Subcommands: train, predict, eval, synth, bench, export-dot, audit.
Flag names are kebab-case versions of the usual hyperparameter names;
--log-min-split-gain takes the natural log of the gain threshold (the
form hyperparameter tables usually report). Exit codes: 0 success,
1 data/model errors, 2 usage errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import forest as forest_mod
from .dataset import CATEGORICAL, NUMERIC, Dataset, load_csv, conform_csv, write_csv
from .errors import ConfigError, DataError, LinforestError
from .oracle import timing_probe
from .synthgen import SynthSpec, gen_dataset, gen_train_test
from .tree import Internal, Leaf, audit_tree

THREADS_ENV = "LINFOREST_THREADS"

HP_FIELDS = ("ntree", "mtry", "overfit_penalty", "min_split_gain", "folds",
             "nodesize_spl", "sample_fraction", "splitratio", "honest", "seed")
CONFIG_KEYS = HP_FIELDS + ("log_min_split_gain", "target", "categorical",
                           "lin_features", "honest")


def _resolve_threads(value: int | None) -> int | None:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{env}'")
    return None


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot open config '{path}': {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config '{path}' is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config '{path}' must be a JSON object")
    for key in cfg:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"config '{path}' has unknown key '{key}'")
    return cfg


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _lin_indices(ds: Dataset, spec) -> tuple[int, ...]:
    names = _split_list(spec) if isinstance(spec, str) else list(spec)
    out = []
    for item in names:
        if isinstance(item, int):
            out.append(item)
        elif isinstance(item, str) and item.lstrip("-").isdigit():
            out.append(int(item))
        else:
            out.append(ds.column_index(str(item)))
    return tuple(out)


def cmd_train(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    target = args.target or cfg.get("target")
    if not target:
        raise ConfigError("no target column given (--target or config)")
    cat = _split_list(args.categorical) if args.categorical else \
        list(cfg.get("categorical", ()))
    ds = load_csv(args.data, target, cat)

    hp = forest_mod.HyperParams()
    for name in HP_FIELDS:
        if name in cfg:
            setattr(hp, name, cfg[name])
    if "log_min_split_gain" in cfg and "min_split_gain" not in cfg:
        hp.min_split_gain = math.exp(float(cfg["log_min_split_gain"]))
    for name in HP_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            setattr(hp, name, value)
    if args.log_min_split_gain is not None:
        hp.min_split_gain = math.exp(args.log_min_split_gain)
    if args.honest:
        hp.honest = True
    lin_spec = args.lin_features or cfg.get("lin_features")
    if lin_spec:
        hp.lin_features = _lin_indices(ds, lin_spec)

    f = forest_mod.train_forest(ds, hp, n_threads=_resolve_threads(args.threads))
    forest_mod.save_forest(f, args.out)
    print(f"trained {hp.ntree} trees on {ds.n} rows; model written to {args.out}")
    return 0


def _write_predictions(preds: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("prediction\n")
        for v in preds:
            fh.write(repr(float(v)) + "\n")


def cmd_predict(args) -> int:
    f = forest_mod.load_forest(args.model)
    ds = conform_csv(args.data, f.schema)
    preds = forest_mod.predict(f, ds)
    _write_predictions(preds, args.out)
    print(f"wrote {len(preds)} predictions to {args.out}")
    return 0


def cmd_eval(args) -> int:
    f = forest_mod.load_forest(args.model)
    ds = conform_csv(args.data, f.schema, response_name=f.response_name)
    metrics = forest_mod.evaluate(f, ds)
    print(f"rmse={metrics['rmse']!r}")
    print(f"mse={metrics['mse']!r}")
    print(f"n_test={metrics['n_test']}")
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(kind=args.kind, n=args.n, seed=args.seed,
                     num_levels=args.levels)
    spec.validate()
    if args.test_out:
        train, test = gen_train_test(spec, args.n_test)
        write_csv(test, args.test_out)
    else:
        train = gen_dataset(spec)
    write_csv(train, args.out)
    print(f"wrote {train.n} training rows to {args.out}"
          + (f" and {args.n_test} test rows to {args.test_out}"
             if args.test_out else ""))
    return 0


def cmd_bench(args) -> int:
    try:
        ns = [int(v) for v in _split_list(args.n)]
    except ValueError:
        raise ConfigError(f"--n must be a comma list of integers, got '{args.n}'")
    if not ns or sorted(ns) != ns:
        raise ConfigError("--n must be ascending")
    strategies = ["fast", "exhaustive"] if args.strategy == "both" else [args.strategy]
    lines = ["strategy,n,d_lin,seconds"]
    for strategy in strategies:
        for n, seconds in timing_probe(ns, args.dlin, strategy, reps=args.reps):
            lines.append(f"{strategy},{n},{args.dlin},{seconds!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# DOT export


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render_dot(f: forest_mod.Forest, tree_index: int) -> str:
    if not 0 <= tree_index < len(f.trees):
        raise DataError(f"tree index {tree_index} out of range "
                        f"(forest has {len(f.trees)} trees)")
    names = [entry["name"] for entry in f.schema]
    lin_names = [names[i] for i in f.lin.indices]
    lines = [f"digraph tree{tree_index} {{", '  node [shape=box];']
    counter = [0]

    def emit(node) -> int:
        me = counter[0]
        counter[0] += 1
        if isinstance(node, Leaf):
            rows = [f"n={node.n_aggregation}",
                    f"intercept={node.model.intercept:.3f}"]
            rows += [f"{nm}={b:.3f}" for nm, b in zip(lin_names, node.model.beta)]
            label = "\\n".join(_dot_escape(r) for r in rows)
            lines.append(f'  n{me} [label="{label}"];')
            return me
        s = node.split
        if s.kind == NUMERIC:
            label = f"{names[s.feature]} < {s.threshold:.6g}"
        else:
            levels = f.schema[s.feature]["levels"]
            label = f"{names[s.feature]} == {levels[s.level]}"
        lines.append(f'  n{me} [label="{_dot_escape(label)}"];')
        left = emit(node.left)
        right = emit(node.right)
        lines.append(f'  n{me} -> n{left} [label="yes"];')
        lines.append(f'  n{me} -> n{right} [label="no"];')
        return me

    emit(f.trees[tree_index].root)
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_export_dot(args) -> int:
    f = forest_mod.load_forest(args.model)
    text = render_dot(f, args.tree)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_audit(args) -> int:
    f = forest_mod.load_forest(args.model)
    indices = [args.tree] if args.tree is not None else range(len(f.trees))
    names = [entry["name"] for entry in f.schema]
    lin_names = [names[i] for i in f.lin.indices]
    for t in indices:
        if not 0 <= t < len(f.trees):
            raise DataError(f"tree index {t} out of range")
        a = audit_tree(f.trees[t].root)
        print(f"tree={t} depth={a.depth} nodes={a.node_count} "
              f"leaves={a.leaf_count} aggregation_rows={sum(a.leaf_sizes)}")
        if args.tree is not None:
            for i, (size, model) in enumerate(zip(a.leaf_sizes, a.leaf_models)):
                coefs = " ".join(f"{nm}={b:.6g}"
                                 for nm, b in zip(lin_names, model.beta))
                print(f"  leaf={i} n={size} intercept={model.intercept:.6g} {coefs}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linforest",
        description="Random forests with ridge-regularized linear leaf models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a forest from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--target", help="response column name")
    p.add_argument("--categorical", help="comma list of categorical columns")
    p.add_argument("--lin-features", dest="lin_features",
                   help="comma list of columns for the leaf linear models")
    p.add_argument("--config", help="JSON file of hyperparameters")
    p.add_argument("--ntree", type=int)
    p.add_argument("--mtry", type=int)
    p.add_argument("--lambda", "--overfit-penalty", dest="overfit_penalty",
                   type=float, help="ridge penalty for leaf models")
    gain = p.add_mutually_exclusive_group()
    gain.add_argument("--min-split-gain", dest="min_split_gain", type=float)
    gain.add_argument("--log-min-split-gain", dest="log_min_split_gain",
                      type=float, help="natural log of --min-split-gain")
    p.add_argument("--folds", type=int)
    p.add_argument("--nodesize-spl", dest="nodesize_spl", type=int)
    p.add_argument("--sample-fraction", dest="sample_fraction", type=float)
    p.add_argument("--splitratio", type=float)
    p.add_argument("--honest", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int,
                   help=f"tree-build parallelism (default: {THREADS_ENV} or all cores)")
    p.add_argument("--out", required=True, help="model file (.lrf)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="prediction CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="RMSE/MSE of a model on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic benchmark data")
    p.add_argument("--kind", choices=["linear", "step", "mixed"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--levels", type=int, default=50,
                   help="step levels for step/mixed surfaces")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--test-out", dest="test_out")
    p.add_argument("--n-test", dest="n_test", type=int, default=2000)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time the fast vs exhaustive split search")
    p.add_argument("--strategy", choices=["fast", "exhaustive", "both"],
                   default="both")
    p.add_argument("--n", required=True, help="comma list of ascending sizes")
    p.add_argument("--dlin", type=int, default=5)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-dot", help="write one tree as a DOT graph")
    p.add_argument("--model", required=True)
    p.add_argument("--tree", type=int, default=0)
    p.add_argument("--out", help="DOT path (default: stdout)")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("audit", help="structural summary of a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--tree", type=int, help="detail a single tree")
    p.set_defaults(func=cmd_audit)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except LinforestError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
