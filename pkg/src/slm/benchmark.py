"""Benchmark suites: datasets x model variants, with reports.

A suite is an INI file: one [dataset:NAME] section per data source
(generator spec or CSV path), one [model:NAME] section per model variant
(flat hyperparameter keys), and optional [model:NAME@DATASET] sections
overriding hyperparameters for a single dataset. Every (dataset, model)
cell trains, evaluates, and lands as one row.

Two report files are written: report.txt, an aligned human table that
includes training time, and report.csv, the machine-readable block with
the time column left out so reruns of the same suite are byte-identical
(timings go to the text report only).
"""

from __future__ import annotations

import configparser
import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from slm import ensemble as ens
from slm import serialize
from slm import tree as tree_mod
from slm.config import (
    build_boost_params,
    build_forest_params,
    build_tree_params,
    parse_value,
)
from slm.data import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    SplitSpec,
    gen_circle_and_ring,
    gen_friedman,
    gen_moons,
    load_csv,
    train_test_split,
)
from slm.errors import SLMError

MODEL_KINDS = ("slm-tree", "slm-forest", "slm-boost", "slr-tree", "slr-forest", "slr-boost")

GENERATORS = ("circle", "moons2", "moons4", "friedman1", "friedman2", "friedman3")


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    options: dict

    def load(self) -> Dataset:
        return make_dataset(self.options)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    hyper: dict
    datasets: tuple[str, ...] | None = None

    def runs_on(self, dataset_name: str) -> bool:
        return self.datasets is None or dataset_name in self.datasets


@dataclass(frozen=True)
class Suite:
    seed: int
    train_fraction: float
    datasets: tuple[DatasetSpec, ...]
    models: tuple[ModelSpec, ...]
    overrides: dict = field(default_factory=dict)

    def hyper_for(self, model: ModelSpec, dataset: DatasetSpec) -> dict:
        merged = dict(model.hyper)
        merged.update(self.overrides.get((model.name, dataset.name), {}))
        return merged


def make_dataset(options: dict) -> Dataset:
    """Build a dataset from flat options: either generator=... or csv=..."""
    opts = dict(options)
    if "csv" in opts:
        return load_csv(
            opts["csv"],
            opts.get("target", "target"),
            opts.get("task", CLASSIFICATION),
            has_header=opts.get("has_header", True),
        )
    gen = opts.get("generator")
    seed = int(opts.get("seed", 0))
    if gen == "circle":
        kwargs = {
            k: opts[k]
            for k in ("blob_std", "ring_radius", "ring_std", "jitter_std")
            if k in opts
        }
        return gen_circle_and_ring(
            int(opts.get("n_per_class", 500)),
            float(opts.get("noise_fraction", 0.2)),
            seed,
            **kwargs,
        )
    if gen in ("moons2", "moons4"):
        kwargs = {k: opts[k] for k in ("base_noise", "jitter_std") if k in opts}
        return gen_moons(
            2 if gen == "moons2" else 4,
            int(opts.get("n_per_class", 500)),
            float(opts.get("noise_fraction", 0.3)),
            seed,
            **kwargs,
        )
    if gen in ("friedman1", "friedman2", "friedman3"):
        variant = int(gen[-1])
        kwargs = {}
        if "noise_std" in opts:
            kwargs["noise_std"] = float(opts["noise_std"])
        return gen_friedman(
            variant,
            int(opts.get("n", 1000)),
            n_features=int(opts.get("n_features", 10)),
            seed=seed,
            unit_range=bool(opts.get("unit_range", False)),
            **kwargs,
        )
    raise SLMError(f"dataset spec needs generator=<{'|'.join(GENERATORS)}> or csv=PATH, got {opts}")


def parse_suite(path) -> Suite:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(f"suite file not found: {path}")
    seed = 0
    train_fraction = 0.6
    if cp.has_section("suite"):
        seed = cp.getint("suite", "seed", fallback=0)
        train_fraction = cp.getfloat("suite", "train_fraction", fallback=0.6)
    datasets = []
    models = []
    overrides = {}
    for section in cp.sections():
        if section == "suite":
            continue
        items = {k: parse_value(v) for k, v in cp.items(section)}
        if section.startswith("dataset:"):
            datasets.append(DatasetSpec(name=section.split(":", 1)[1], options=items))
        elif section.startswith("model:"):
            name = section.split(":", 1)[1]
            if "@" in name:
                model_name, ds_name = name.split("@", 1)
                overrides[(model_name, ds_name)] = items
            else:
                kind = items.pop("kind", name)
                if kind not in MODEL_KINDS:
                    raise SLMError(f"[{section}]: unknown model kind {kind!r}")
                scope = items.pop("datasets", None)
                if scope is not None:
                    scope = tuple(s.strip() for s in str(scope).split(",") if s.strip())
                models.append(ModelSpec(name=name, kind=kind, hyper=items, datasets=scope))
        else:
            raise SLMError(f"unknown suite section [{section}]")
    return Suite(
        seed=seed,
        train_fraction=train_fraction,
        datasets=tuple(datasets),
        models=tuple(models),
        overrides=overrides,
    )


def model_task(kind: str) -> str:
    return CLASSIFICATION if kind.startswith("slm") else REGRESSION


def fit_model(kind: str, train: Dataset, hyper: dict, seed: int):
    """Train one model variant; returns (model, learning curve or None)."""
    if kind.endswith("-tree"):
        params = build_tree_params(hyper, train.task)
        model = tree_mod.build_tree(train, params, np.random.default_rng(seed))
        return model, None
    if kind.endswith("-forest"):
        params = build_forest_params(hyper, train.task, seed)
        model = ens.fit_forest(train, params)
        return model, None
    params = build_boost_params(hyper, train.task, seed)
    model, curve = ens.fit_boost(train, params)
    return model, curve


def evaluate(model, features: np.ndarray, target: np.ndarray) -> tuple[str, float]:
    """(metric name, value): accuracy in percent, or RMSE."""
    if isinstance(model, tree_mod.SLMTree):
        if model.task == CLASSIFICATION:
            labels, _ = tree_mod.predict(model, features)
            return "accuracy_pct", float(np.mean(labels == target) * 100.0)
        pred = tree_mod.predict(model, features)
        return "rmse", float(np.sqrt(np.mean((pred - target) ** 2)))
    if model.kind == ens.FOREST:
        if model.task == CLASSIFICATION:
            labels, _ = ens.predict_forest(model, features)
            return "accuracy_pct", float(np.mean(labels == target) * 100.0)
        pred = ens.predict_forest(model, features)
        return "rmse", float(np.sqrt(np.mean((pred - target) ** 2)))
    if model.task == CLASSIFICATION:
        labels, _ = ens.predict_boost(model, features)
        return "accuracy_pct", float(np.mean(labels == target) * 100.0)
    pred = ens.predict_boost(model, features)
    return "rmse", float(np.sqrt(np.mean((pred - target) ** 2)))


def model_summary(model) -> dict:
    if isinstance(model, tree_mod.SLMTree):
        stats = tree_mod.tree_stats(model)
        return {
            "param_count": tree_mod.param_count(model),
            "depth": stats.depth,
            "n_trees": 1,
            "n_partitions": stats.n_partitions,
        }
    stats = [tree_mod.tree_stats(t) for t in model.trees]
    return {
        "param_count": sum(tree_mod.param_count(t) for t in model.trees),
        "depth": max((s.depth for s in stats), default=0),
        "n_trees": len(model.trees),
        "n_partitions": sum(s.n_partitions for s in stats),
    }


@dataclass(frozen=True)
class CellResult:
    dataset: str
    model: str
    kind: str
    status: str
    metric_name: str = ""
    train_metric: float | None = None
    test_metric: float | None = None
    param_count: int | None = None
    depth: int | None = None
    n_trees: int | None = None
    seconds: float | None = None


def run_suite(suite: Suite, out_dir, save_models: bool = True) -> list[CellResult]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for ds_spec in suite.datasets:
        try:
            ds = ds_spec.load()
            train, test = train_test_split(
                ds, SplitSpec(train_fraction=suite.train_fraction, seed=suite.seed)
            )
        except Exception as exc:
            for model_spec in suite.models:
                if not model_spec.runs_on(ds_spec.name):
                    continue
                results.append(
                    CellResult(
                        dataset=ds_spec.name,
                        model=model_spec.name,
                        kind=model_spec.kind,
                        status=f"FAIL({exc})",
                    )
                )
            continue
        for model_spec in suite.models:
            if not model_spec.runs_on(ds_spec.name):
                continue
            results.append(
                _run_cell(suite, ds_spec, model_spec, train, test, out_dir, save_models)
            )
    _write_reports(suite, results, out_dir)
    return results


def _run_cell(suite, ds_spec, model_spec, train, test, out_dir, save_models):
    hyper = suite.hyper_for(model_spec, ds_spec)
    cell_config = {
        "dataset": ds_spec.name,
        "dataset_options": ds_spec.options,
        "model": model_spec.name,
        "kind": model_spec.kind,
        "hyper": hyper,
        "seed": suite.seed,
        "train_fraction": suite.train_fraction,
    }
    try:
        if model_task(model_spec.kind) != train.task:
            raise SLMError(
                f"model {model_spec.kind} expects {model_task(model_spec.kind)} "
                f"data but dataset {ds_spec.name} is {train.task}"
            )
        started = time.perf_counter()
        model, curve = fit_model(model_spec.kind, train, hyper, suite.seed)
        seconds = time.perf_counter() - started
        metric_name, train_metric = evaluate(model, train.features, train.target)
        _, test_metric = evaluate(model, test.features, test.target)
        summary = model_summary(model)
        stem = f"{ds_spec.name}__{model_spec.name}"
        comment = "config: " + json.dumps(cell_config, sort_keys=True)
        if save_models:
            serialize.save_model(model, out_dir / f"{stem}.model.json", config=cell_config)
        if curve is not None:
            holdout = ens.boost_curve(model, test.features, test.target)
            ens.export_learning_curve(
                curve, out_dir / f"{stem}.curve.csv", holdout=holdout, comment=comment
            )
        elif model_spec.kind.endswith("-forest"):
            train_curve = ens.forest_curve(model, train.features, train.target)
            holdout = ens.forest_curve(model, test.features, test.target)
            ens.export_learning_curve(
                train_curve, out_dir / f"{stem}.curve.csv", holdout=holdout, comment=comment
            )
        return CellResult(
            dataset=ds_spec.name,
            model=model_spec.name,
            kind=model_spec.kind,
            status="ok",
            metric_name=metric_name,
            train_metric=train_metric,
            test_metric=test_metric,
            param_count=summary["param_count"],
            depth=summary["depth"],
            n_trees=summary["n_trees"],
            seconds=seconds,
        )
    except Exception as exc:
        return CellResult(
            dataset=ds_spec.name,
            model=model_spec.name,
            kind=model_spec.kind,
            status=f"FAIL({exc})",
        )


_CSV_COLUMNS = (
    "dataset",
    "model",
    "kind",
    "status",
    "metric_name",
    "train_metric",
    "test_metric",
    "param_count",
    "depth",
    "n_trees",
)


def _write_reports(suite, results, out_dir: Path):
    suite_doc = {
        "seed": suite.seed,
        "train_fraction": suite.train_fraction,
        "datasets": [d.name for d in suite.datasets],
        "models": [m.name for m in suite.models],
    }
    comment = "# config: " + json.dumps(suite_doc, sort_keys=True) + "\n"

    with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(comment)
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.dataset,
                    r.model,
                    r.kind,
                    r.status,
                    r.metric_name,
                    "" if r.train_metric is None else repr(r.train_metric),
                    "" if r.test_metric is None else repr(r.test_metric),
                    "" if r.param_count is None else r.param_count,
                    "" if r.depth is None else r.depth,
                    "" if r.n_trees is None else r.n_trees,
                ]
            )

    with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(format_table(results) + "\n\nmachine-readable: report.csv\n")


def format_table(results: list[CellResult]) -> str:
    headers = ["dataset", "model", "metric", "train", "test", "params", "depth", "trees", "time_s"]
    rows = []
    for r in results:
        if r.status != "ok":
            rows.append([r.dataset, r.model, r.status, "", "", "", "", "", ""])
            continue
        rows.append(
            [
                r.dataset,
                r.model,
                r.metric_name,
                f"{r.train_metric:.2f}",
                f"{r.test_metric:.2f}",
                str(r.param_count),
                str(r.depth),
                str(r.n_trees),
                f"{r.seconds:.2f}",
            ]
        )
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines)
