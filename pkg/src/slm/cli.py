"""Command line front end.

Commands: gen-data, train, predict, inspect, benchmark. Every artifact
embeds the effective configuration (models and metrics carry a JSON
config block; CSVs carry a leading '# config:' comment), so any output
can be reproduced from itself.

Exit status: 0 on success, 2 for usage or input errors, 3 for training
failures.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from pathlib import Path

import numpy as np

from slm import benchmark as bench
from slm import ensemble as ens
from slm import serialize
from slm import tree as tree_mod
from slm.config import ALL_KEYS, parse_value
from slm.data import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    SplitSpec,
    load_csv,
    save_csv,
    train_test_split,
)
from slm.errors import CsvError, SchemaMismatchError, SLMError, TrainingError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRAINING = 3

_HYPER_FLAGS = {
    "d0": int,
    "p": int,
    "r": int,
    "alpha": float,
    "a_int": float,
    "beta": float,
    "q_max": int,
    "theta_minimax": float,
    "exhaustive_limit": int,
    "proj_rounds": str,
    "bins": int,
    "max_depth": int,
    "min_samples": int,
    "min_loss": float,
    "trees": int,
    "rounds": int,
    "learning_rate": float,
    "lambda": float,
    "base_score": float,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slm",
        description="Oblique-tree learner: train, predict, and benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    gen.add_argument("--kind", required=True, choices=bench.GENERATORS)
    gen.add_argument("--n", type=int, required=True,
                     help="samples per class (2D sets) or total samples (friedman)")
    gen.add_argument("--noise", type=float, default=0.0,
                     help="fraction of samples jittered near the boundary (2D sets)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--features", type=int, default=10, help="friedman-1 dimension count")
    gen.add_argument("--noise-std", type=float, default=None, help="friedman target noise")
    gen.add_argument("--jitter-std", type=float, default=None, help="2D boundary jitter scale")
    gen.add_argument("--unit-range", action="store_true",
                     help="draw friedman-2/3 inputs on [0,1] instead of the wide ranges")
    gen.add_argument("-o", "--out", required=True)

    train = sub.add_parser("train", help="train one model variant on a CSV")
    train.add_argument("--data", required=True)
    train.add_argument("--target", default="target", help="target column name or index")
    train.add_argument("--task", choices=(CLASSIFICATION, REGRESSION), default=None,
                       help="defaults to the task implied by --model")
    train.add_argument("--model", required=True, choices=bench.MODEL_KINDS)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--train-fraction", type=float, default=None)
    train.add_argument("--split-seed", type=int, default=None)
    train.add_argument("--no-split", action="store_true",
                       help="train on the whole file; metrics cover the whole file")
    train.add_argument("--no-header", action="store_true")
    train.add_argument("--config", default=None, help="INI file with a [train] section of defaults")
    train.add_argument("-o", "--out", required=True, help="model file path")
    train.add_argument("--metrics", default=None, help="metrics report path (default: <out>.metrics.txt)")
    train.add_argument("--curve", default=None, help="learning-curve CSV (default: <out>.curve.csv)")
    for key, typ in _HYPER_FLAGS.items():
        train.add_argument(f"--{key.replace('_', '-')}", dest=f"hp_{key}", type=typ, default=None)

    predict = sub.add_parser("predict", help="predict with a trained model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--target", default=None,
                         help="target column to drop if present (defaults to the one used in training)")
    predict.add_argument("--task", choices=(CLASSIFICATION, REGRESSION), default=None,
                         help="assert the model solves this task")
    predict.add_argument("--no-header", action="store_true")
    predict.add_argument("-o", "--out", required=True)

    inspect = sub.add_parser("inspect", help="print structure stats of a model file")
    inspect.add_argument("--model", required=True)

    benchmark = sub.add_parser("benchmark", help="run a suite of (dataset, model) cells")
    benchmark.add_argument("--suite", required=True, help="suite INI file")
    benchmark.add_argument("--out-dir", required=True)
    benchmark.add_argument("--no-models", action="store_true", help="skip writing model files")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-data":
            return _cmd_gen_data(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "predict":
            return _cmd_predict(args)
        if args.command == "inspect":
            return _cmd_inspect(args)
        if args.command == "benchmark":
            return _cmd_benchmark(args)
        parser.error(f"unknown command {args.command}")
    except (TrainingError,) as exc:
        print(f"error: training: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (CsvError, SchemaMismatchError, SLMError, FileNotFoundError, ValueError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    options = {"generator": args.kind, "seed": args.seed}
    if args.kind in ("circle", "moons2", "moons4"):
        options["n_per_class"] = args.n
        options["noise_fraction"] = args.noise
        if args.jitter_std is not None:
            options["jitter_std"] = args.jitter_std
    else:
        options["n"] = args.n
        options["n_features"] = args.features
        if args.noise_std is not None:
            options["noise_std"] = args.noise_std
        if args.unit_range:
            options["unit_range"] = True
    ds = bench.make_dataset(options)
    comment = "config: " + json.dumps(options, sort_keys=True)
    save_csv(ds, args.out, target_name="target", comment=comment)
    kind = ds.n_classes if ds.task == CLASSIFICATION else "-"
    print(f"wrote {args.out}: L={ds.n_samples} D={ds.n_features} K={kind}")
    return EXIT_OK


def _load_train_config(path) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    if not cp.has_section("train"):
        raise SLMError(f"{path}: missing [train] section")
    return {k: parse_value(v) for k, v in cp.items("train")}


def _cmd_train(args) -> int:
    file_conf = _load_train_config(args.config) if args.config else {}

    def setting(name, default):
        flag = getattr(args, name.replace("-", "_"), None)
        if flag is not None:
            return flag
        return file_conf.get(name, default)

    task = args.task or file_conf.get("task") or bench.model_task(args.model)
    if task != bench.model_task(args.model):
        raise SLMError(
            f"model {args.model} is a {bench.model_task(args.model)} variant "
            f"but --task {task} was given"
        )
    seed = int(setting("seed", 0))
    train_fraction = float(setting("train_fraction", 0.6))
    split_seed = setting("split_seed", None)
    split_seed = seed if split_seed is None else int(split_seed)

    data_path = args.data
    if not Path(data_path).exists():
        raise FileNotFoundError(f"input not found: {data_path}")
    ds = load_csv(data_path, _target_arg(args.target), task, has_header=not args.no_header)

    hyper = {k: v for k, v in file_conf.items() if k in ALL_KEYS}
    for key in _HYPER_FLAGS:
        val = getattr(args, f"hp_{key}")
        if val is not None:
            hyper[key] = val

    if args.no_split:
        train, test = ds, None
    else:
        train, test = train_test_split(
            ds, SplitSpec(train_fraction=train_fraction, seed=split_seed)
        )

    config = {
        "command": "train",
        "data": str(data_path),
        "target": args.target,
        "task": task,
        "model": args.model,
        "seed": seed,
        "split": None if args.no_split else {"train_fraction": train_fraction, "seed": split_seed},
        "hyper": dict(sorted(hyper.items())),
    }

    started = time.perf_counter()
    model, curve = bench.fit_model(args.model, train, hyper, seed)
    seconds = time.perf_counter() - started

    extra = {"feature_names": list(ds.feature_names or []), "target_name": _target_name(args.target)}
    serialize.save_model(model, args.out, config=config, extra=extra)

    metric_name, train_metric = bench.evaluate(model, train.features, train.target)
    test_metric = None
    if test is not None:
        _, test_metric = bench.evaluate(model, test.features, test.target)
    summary = bench.model_summary(model)

    curve_path = args.curve or f"{args.out}.curve.csv"
    comment = "config: " + json.dumps(config, sort_keys=True)
    if curve is not None:
        holdout = (
            ens.boost_curve(model, test.features, test.target) if test is not None else None
        )
        ens.export_learning_curve(curve, curve_path, holdout=holdout, comment=comment)
    elif args.model.endswith("-forest"):
        train_curve = ens.forest_curve(model, train.features, train.target)
        holdout = (
            ens.forest_curve(model, test.features, test.target) if test is not None else None
        )
        ens.export_learning_curve(train_curve, curve_path, holdout=holdout, comment=comment)

    metrics = {
        "model": args.model,
        "metric_name": metric_name,
        "train_metric": train_metric,
        "test_metric": test_metric,
        "param_count": summary["param_count"],
        "depth": summary["depth"],
        "n_trees": summary["n_trees"],
        "n_partitions": summary["n_partitions"],
        "wall_time_s": seconds,
        "config": config,
    }
    metrics_path = args.metrics or f"{args.out}.metrics.txt"
    _write_metrics(metrics_path, metrics)

    shown_test = "-" if test_metric is None else f"{test_metric:.4f}"
    print(
        f"trained {args.model}: {metric_name} train={train_metric:.4f} "
        f"test={shown_test} params={summary['param_count']} "
        f"depth={summary['depth']} ({seconds:.2f}s)"
    )
    print(f"model: {args.out}")
    return EXIT_OK


def _target_arg(target):
    if isinstance(target, str) and target.lstrip("-").isdigit():
        return int(target)
    return target


def _target_name(target):
    return target if isinstance(target, str) else None


def _write_metrics(path, metrics: dict):
    lines = ["slm train metrics", "================="]
    for key in (
        "model",
        "metric_name",
        "train_metric",
        "test_metric",
        "param_count",
        "depth",
        "n_trees",
        "n_partitions",
        "wall_time_s",
    ):
        value = metrics[key]
        if isinstance(value, float):
            value = f"{value:.6f}"
        lines.append(f"{key:<14} {value}")
    lines.append("")
    lines.append("--- machine-readable ---")
    lines.append(json.dumps(metrics, sort_keys=True, default=str))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_predict(args) -> int:
    if not Path(args.model).exists():
        raise FileNotFoundError(f"input not found: {args.model}")
    if not Path(args.data).exists():
        raise FileNotFoundError(f"input not found: {args.data}")
    model = serialize.load_model(args.model)
    with open(args.model, encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.task is not None and model.task != args.task:
        raise SchemaMismatchError(
            f"model solves {model.task}, but --task {args.task} was requested"
        )
    target_name = args.target if args.target is not None else doc.get("target_name")
    features = _read_matrix(args.data, target_name, not args.no_header, model.n_features)
    if features.shape[1] != model.n_features:
        raise SchemaMismatchError(
            f"model expects {model.n_features} feature columns, data has {features.shape[1]}"
        )

    config = {
        "command": "predict",
        "model": str(args.model),
        "data": str(args.data),
        "model_config": doc.get("config"),
    }
    import csv as _csv

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True, default=str) + "\n")
        writer = _csv.writer(fh)
        if model.task == CLASSIFICATION:
            labels, probs = _predict_any(model, features)
            writer.writerow(
                ["index", "prediction"] + [f"prob_{k}" for k in range(probs.shape[1])]
            )
            for i in range(len(labels)):
                writer.writerow([i, int(labels[i])] + [repr(float(p)) for p in probs[i]])
        else:
            values = _predict_any(model, features)
            writer.writerow(["index", "prediction"])
            for i, v in enumerate(values):
                writer.writerow([i, repr(float(v))])
    print(f"wrote {args.out}: {features.shape[0]} predictions")
    return EXIT_OK


def _read_matrix(path, target_name, has_header, n_features_hint):
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in _csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise SLMError(f"{path}: empty file")
    header = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    drop = None
    if header is not None and target_name is not None and target_name in header:
        drop = header.index(target_name)
    out = np.empty((len(rows), len(rows[0]) - (drop is not None)), dtype=np.float64)
    for i, row in enumerate(rows, start=1):
        cells = [c for j, c in enumerate(row) if j != drop]
        if len(cells) != out.shape[1]:
            raise SLMError(f"{path}: row {i}: expected {out.shape[1]} columns, found {len(cells)}")
        try:
            out[i - 1] = [float(c) for c in cells]
        except ValueError:
            raise SLMError(f"{path}: row {i}: non-numeric feature cell") from None
    return out


def _predict_any(model, features):
    if isinstance(model, tree_mod.SLMTree):
        return tree_mod.predict(model, features)
    if model.kind == ens.FOREST:
        return ens.predict_forest(model, features)
    return ens.predict_boost(model, features)


def _cmd_inspect(args) -> int:
    if not Path(args.model).exists():
        raise FileNotFoundError(f"input not found: {args.model}")
    model = serialize.load_model(args.model)
    kind = serialize.model_kind(model)
    summary = bench.model_summary(model)
    print(f"kind           {kind}")
    print(f"task           {model.task}")
    print(f"n_features     {model.n_features}")
    if isinstance(model, tree_mod.SLMTree):
        stats = tree_mod.tree_stats(model)
        print(f"d0             {len(model.d0_dims)} (dims {list(map(int, model.d0_dims))})")
        print(f"depth          {stats.depth}")
        print(f"nodes_per_level {list(stats.nodes_per_level)}")
        print(f"partitions     {stats.n_partitions}")
        print(f"leaves         {stats.n_leaves}")
    else:
        print(f"n_trees        {summary['n_trees']}")
        print(f"max_depth      {summary['depth']}")
        print(f"partitions     {summary['n_partitions']}")
    print(f"param_count    {summary['param_count']}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    suite = bench.parse_suite(args.suite)
    results = bench.run_suite(suite, args.out_dir, save_models=not args.no_models)
    print(bench.format_table(results))
    print(f"\nreports in {args.out_dir}/report.txt and report.csv")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
