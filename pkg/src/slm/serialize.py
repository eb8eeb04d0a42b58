"""Versioned JSON model files.

Floats are written with Python's shortest round-trip repr, so every real
survives save/load bit for bit. Keys are sorted and the layout is stable,
which makes retraining with the same config produce byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from slm import ensemble as ensemble_mod
from slm import projection as projection_mod
from slm import tree as tree_mod
from slm.errors import SLMError

FORMAT_NAME = "slm-model"
FORMAT_VERSION = 1


def model_kind(model) -> str:
    """CLI-facing variant name, e.g. slm-forest or slr-tree."""
    prefix = "slm" if model.task == "classification" else "slr"
    if isinstance(model, tree_mod.SLMTree):
        return f"{prefix}-tree"
    return f"{prefix}-{model.kind}"


def save_model(model, path, config: dict | None = None, extra: dict | None = None):
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": model_kind(model),
        "model": to_document(model),
    }
    if config is not None:
        doc["config"] = config
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_NAME:
        raise SLMError(f"{path}: not an slm model file")
    if doc.get("version") != FORMAT_VERSION:
        raise SLMError(f"{path}: unsupported model format version {doc.get('version')}")
    return from_document(doc["model"])


def load_config(path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc.get("config")


def to_document(model) -> dict:
    if isinstance(model, tree_mod.SLMTree):
        return _tree_doc(model)
    if isinstance(model, ensemble_mod.EnsembleModel):
        return {
            "type": "ensemble",
            "ensemble_kind": model.kind,
            "task": model.task,
            "n_features": model.n_features,
            "n_classes": model.n_classes,
            "learning_rate": float(model.learning_rate),
            "base_score": float(model.base_score),
            "seed": int(model.seed),
            "tree_streams": list(range(len(model.trees))),
            "trees": [_tree_doc(t) for t in model.trees],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def from_document(doc: dict):
    if doc["type"] == "tree":
        return _tree_from_doc(doc)
    if doc["type"] == "ensemble":
        return ensemble_mod.EnsembleModel(
            kind=doc["ensemble_kind"],
            task=doc["task"],
            n_features=doc["n_features"],
            trees=tuple(_tree_from_doc(t) for t in doc["trees"]),
            n_classes=doc["n_classes"],
            learning_rate=doc["learning_rate"],
            base_score=doc["base_score"],
            seed=doc["seed"],
        )
    raise SLMError(f"unknown model document type: {doc.get('type')!r}")


def _params_doc(params: tree_mod.TreeParams) -> dict:
    pj = params.projection
    return {
        "max_depth": params.max_depth,
        "min_samples": params.min_samples,
        "min_loss": float(params.min_loss),
        "bins": params.bins,
        "loss_kind": params.loss_kind,
        "projection": {
            "d0": pj.d0,
            "p": pj.p,
            "r": pj.r,
            "alpha": float(pj.alpha),
            "a_int": float(pj.a_int),
            "beta": float(pj.beta),
            "q_max": pj.q_max,
            "theta_minimax": float(pj.theta_minimax),
            "rounds": [list(r) for r in pj.rounds],
            "exhaustive_limit": pj.exhaustive_limit,
        },
    }


def _params_from_doc(doc: dict) -> tree_mod.TreeParams:
    pj = doc["projection"]
    return tree_mod.TreeParams(
        projection=projection_mod.ProjectionParams(
            d0=pj["d0"],
            p=pj["p"],
            r=pj["r"],
            alpha=pj["alpha"],
            a_int=pj["a_int"],
            beta=pj["beta"],
            q_max=pj["q_max"],
            theta_minimax=pj["theta_minimax"],
            rounds=tuple(tuple(r) for r in pj["rounds"]),
            exhaustive_limit=pj["exhaustive_limit"],
        ),
        max_depth=doc["max_depth"],
        min_samples=doc["min_samples"],
        min_loss=doc["min_loss"],
        bins=doc["bins"],
        loss_kind=doc["loss_kind"],
    )


def _tree_doc(tree: tree_mod.SLMTree) -> dict:
    return {
        "type": "tree",
        "task": tree.task,
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "d0_dims": [int(d) for d in tree.d0_dims],
        "params": _params_doc(tree.params),
        "root": _node_doc(tree.root),
    }


def _tree_from_doc(doc: dict) -> tree_mod.SLMTree:
    return tree_mod.SLMTree(
        root=_node_from_doc(doc["root"]),
        d0_dims=np.array(doc["d0_dims"], dtype=np.int64),
        task=doc["task"],
        n_features=doc["n_features"],
        params=_params_from_doc(doc["params"]),
        n_classes=doc["n_classes"],
    )


def _node_doc(node) -> dict:
    if isinstance(node, tree_mod.LeafNode):
        out = {"type": "leaf", "depth": node.depth, "n_samples": node.n_samples}
        if node.histogram is not None:
            out["histogram"] = [int(c) for c in node.histogram]
        else:
            out["value"] = float(node.value)
        return out
    return {
        "type": "internal",
        "depth": node.depth,
        "n_samples": node.n_samples,
        "splits": [
            {
                "weights": [float(w) for w in s.weights],
                "threshold": float(s.threshold),
                "loss": float(s.loss),
            }
            for s in node.splits
        ],
        "children": {
            "".join(map(str, key)): _node_doc(child)
            for key, child in node.children.items()
        },
    }


def _node_from_doc(doc: dict):
    if doc["type"] == "leaf":
        histogram = doc.get("histogram")
        return tree_mod.LeafNode(
            depth=doc["depth"],
            n_samples=doc["n_samples"],
            histogram=None if histogram is None else np.array(histogram, dtype=np.int64),
            value=doc.get("value"),
        )
    splits = tuple(
        tree_mod.SplitRecord(
            weights=np.array(s["weights"], dtype=np.float64),
            threshold=s["threshold"],
            loss=s["loss"],
        )
        for s in doc["splits"]
    )
    children = {
        tuple(int(ch) for ch in key): _node_from_doc(child)
        for key, child in doc["children"].items()
    }
    return tree_mod.InternalNode(
        depth=doc["depth"],
        n_samples=doc["n_samples"],
        splits=splits,
        children=children,
    )
