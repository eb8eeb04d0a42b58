"""Flat hyperparameter schema shared by CLI flags, train config files, and
benchmark suite sections."""

from __future__ import annotations

from slm.data import CLASSIFICATION
from slm.ensemble import BoostParams, ForestParams
from slm.errors import SLMError
from slm.projection import ProjectionParams
from slm.tree import TreeParams

PROJECTION_KEYS = (
    "d0",
    "p",
    "r",
    "alpha",
    "a_int",
    "beta",
    "q_max",
    "theta_minimax",
    "exhaustive_limit",
    "proj_rounds",
)
TREE_KEYS = PROJECTION_KEYS + ("bins", "max_depth", "min_samples", "min_loss")
FOREST_KEYS = TREE_KEYS + ("trees",)
BOOST_KEYS = TREE_KEYS + ("rounds", "learning_rate", "lambda", "base_score")
ALL_KEYS = tuple(dict.fromkeys(FOREST_KEYS + BOOST_KEYS))


def parse_value(text: str):
    """Best-effort typing for INI values: bool, int, float, else string."""
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def parse_proj_rounds(text) -> tuple[tuple[float, float, int], ...]:
    """Parse 'alpha,beta,r[; alpha,beta,r ...]' into round triples."""
    if not isinstance(text, str):
        raise SLMError(f"proj_rounds must be a string of triples, got {text!r}")
    rounds = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 3:
            raise SLMError(f"proj_rounds entry {chunk!r} is not alpha,beta,r")
        rounds.append((float(parts[0]), float(parts[1]), int(parts[2])))
    return tuple(rounds)


def _check_keys(hyper: dict, allowed, context: str):
    unknown = sorted(set(hyper) - set(allowed))
    if unknown:
        raise SLMError(f"{context}: unknown hyperparameters {unknown}")


def build_projection_params(hyper: dict) -> ProjectionParams:
    kwargs = {}
    for key in PROJECTION_KEYS:
        if key not in hyper or hyper[key] is None:
            continue
        if key == "proj_rounds":
            kwargs["rounds"] = parse_proj_rounds(hyper[key])
        else:
            kwargs[key] = hyper[key]
    return ProjectionParams(**kwargs)


def build_tree_params(hyper: dict, task: str, check: bool = True) -> TreeParams:
    if check:
        _check_keys(hyper, TREE_KEYS, "tree model")
    kwargs = {
        k: hyper[k]
        for k in ("bins", "max_depth", "min_samples", "min_loss")
        if k in hyper and hyper[k] is not None
    }
    return TreeParams(
        projection=build_projection_params(hyper),
        loss_kind="entropy" if task == CLASSIFICATION else "mse",
        **kwargs,
    )


def build_forest_params(hyper: dict, task: str, seed: int) -> ForestParams:
    _check_keys(hyper, FOREST_KEYS, "forest model")
    n_trees = hyper.get("trees")
    kwargs = {"n_trees": n_trees} if n_trees is not None else {}
    return ForestParams(tree=build_tree_params(hyper, task, check=False), seed=seed, **kwargs)


def build_boost_params(hyper: dict, task: str, seed: int) -> BoostParams:
    _check_keys(hyper, BOOST_KEYS, "boost model")
    kwargs = {}
    for src, dst in (
        ("rounds", "n_rounds"),
        ("learning_rate", "learning_rate"),
        ("lambda", "lam"),
        ("base_score", "base_score"),
    ):
        if hyper.get(src) is not None:
            kwargs[dst] = hyper[src]
    return BoostParams(tree=build_tree_params(hyper, task, check=False), seed=seed, **kwargs)
