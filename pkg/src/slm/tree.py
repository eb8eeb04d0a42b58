"""Single oblique-split tree: training, prediction, and structure readouts.

An internal node holds one to q_max hyperplane splits; every training
sample routes to the child keyed by its sign vector (one bit per split,
bit = [w.x >= t]) and empty cells are dropped. Leaves store a class
histogram (classification) or a scalar value (regression / boosting
weight). A node stops splitting when it reaches max_depth, falls under
min_samples, its own loss falls under min_loss, or no candidate improves
on the node loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from slm import dft, projection
from slm.data import CLASSIFICATION, REGRESSION, Dataset

_IMPROVE_TOL = 1e-12


@dataclass(frozen=True)
class TreeParams:
    projection: projection.ProjectionParams = field(
        default_factory=projection.ProjectionParams
    )
    max_depth: int = 8
    min_samples: int = 10
    min_loss: float = 0.0
    bins: int = 16
    loss_kind: str = "entropy"

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples < 2:
            raise ValueError("min_samples must be >= 2")
        if self.min_loss < 0:
            raise ValueError("min_loss must be >= 0")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.loss_kind not in ("entropy", "mse", "xgb_gain"):
            raise ValueError(f"unknown loss_kind: {self.loss_kind!r}")


@dataclass(frozen=True)
class SplitRecord:
    weights: np.ndarray
    threshold: float
    loss: float


@dataclass(frozen=True)
class LeafNode:
    depth: int
    n_samples: int
    histogram: np.ndarray | None = None
    value: float | None = None


@dataclass(frozen=True)
class InternalNode:
    depth: int
    n_samples: int
    splits: tuple[SplitRecord, ...]
    children: dict[tuple[int, ...], "LeafNode | InternalNode"]


@dataclass(frozen=True)
class SLMTree:
    root: LeafNode | InternalNode
    d0_dims: np.ndarray
    task: str
    n_features: int
    params: TreeParams
    n_classes: int | None = None


def select_subspace(
    ds: Dataset, d0: int, bins: int, loss_kind: dft.LossKind
) -> np.ndarray:
    """Indices of the d0 most discriminant dimensions, original order kept."""
    if not 1 <= d0 <= ds.n_features:
        raise ValueError(f"d0 must be in [1, {ds.n_features}], got {d0}")
    order, _ = dft.rank_features(ds.features, ds.target, bins, loss_kind)
    return np.sort(order[:d0])


def resolve_loss(task: str, params: TreeParams, n_classes: int | None) -> dft.LossKind:
    if params.loss_kind == "entropy":
        if task != CLASSIFICATION:
            raise ValueError("entropy loss requires a classification task")
        return dft.EntropyLoss(n_classes)
    if params.loss_kind == "mse":
        if task != REGRESSION:
            raise ValueError("mse loss requires a regression task")
        return dft.MseLoss()
    raise ValueError(
        "xgb_gain trees take gradient targets; they are grown by the boosting "
        "driver, not from a Dataset"
    )


def build_tree(train: Dataset, params: TreeParams, rng: np.random.Generator) -> SLMTree:
    """Grow a tree on a dataset (entropy or mse loss)."""
    if train.n_samples == 0:
        raise ValueError("empty training set")
    loss = resolve_loss(train.task, params, train.n_classes)
    d0 = params.projection.d0 or train.n_features
    dims = select_subspace(train, d0, params.bins, loss)
    root = _grow(train.features[:, dims], train.target, loss, params, 0, rng)
    return SLMTree(
        root=root,
        d0_dims=dims,
        task=train.task,
        n_features=train.n_features,
        params=params,
        n_classes=train.n_classes,
    )


def build_gradient_tree(
    features: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    lam: float,
    params: TreeParams,
    rng: np.random.Generator,
    d0_dims: np.ndarray | None = None,
) -> SLMTree:
    """Grow a regression-shaped tree on boosting gradients (gain loss)."""
    features = np.asarray(features, dtype=np.float64)
    targets = np.column_stack([g, h])
    loss = dft.XgbGainLoss(lam=lam)
    if d0_dims is None:
        d0 = params.projection.d0 or features.shape[1]
        order, _ = dft.rank_features(features, targets, params.bins, loss)
        d0_dims = np.sort(order[:d0])
    root = _grow(features[:, d0_dims], targets, loss, params, 0, rng)
    return SLMTree(
        root=root,
        d0_dims=d0_dims,
        task=REGRESSION,
        n_features=features.shape[1],
        params=params,
    )


def _make_leaf(targets, loss, depth: int):
    n = targets.shape[0]
    payload = dft.leaf_value(targets, loss)
    if isinstance(loss, dft.EntropyLoss):
        return LeafNode(depth=depth, n_samples=n, histogram=payload)
    return LeafNode(depth=depth, n_samples=n, value=payload)


def split_node(
    features_sub: np.ndarray,
    targets: np.ndarray,
    loss: dft.LossKind,
    params: TreeParams,
    rng: np.random.Generator,
) -> tuple[tuple[SplitRecord, ...], dict[tuple[int, ...], np.ndarray]] | None:
    """One node-splitting step: candidates, decorrelated winners, routing.

    Returns (splits, {sign vector: sample index array}) or None when the
    node should become a leaf (no feasible or improving candidate).
    """
    order, _ = dft.rank_features(features_sub, targets, params.bins, loss)
    candidates = projection.sample_candidates(
        features_sub[:, order], targets, loss, params.bins, params.projection, rng
    )
    feasible = [c for c in candidates if c.cost.feasible]
    if not feasible:
        return None
    reference = dft.split_reference_loss(targets, loss)
    if min(c.cost.loss for c in feasible) >= reference - _IMPROVE_TOL:
        return None
    winners = projection.select_decorrelated(
        feasible, params.projection.q_max, params.projection.theta_minimax
    )
    d0 = features_sub.shape[1]
    splits = []
    for c in winners:
        weights = np.zeros(d0)
        weights[order] = c.unit
        splits.append(
            SplitRecord(weights=weights, threshold=c.cost.threshold, loss=c.cost.loss)
        )
    splits = tuple(splits)
    bits = _sign_bits(features_sub, splits)
    cells: dict[tuple[int, ...], list[int]] = {}
    for i, key in enumerate(map(tuple, bits)):
        cells.setdefault(key, []).append(i)
    if len(cells) < 2:
        return None
    return splits, {k: np.array(v) for k, v in cells.items()}


def _sign_bits(features_sub: np.ndarray, splits: tuple[SplitRecord, ...]) -> np.ndarray:
    w = np.stack([s.weights for s in splits])
    t = np.array([s.threshold for s in splits])
    return (features_sub @ w.T >= t).astype(np.int8)


def _grow(features_sub, targets, loss, params, depth, rng):
    n = features_sub.shape[0]
    if (
        depth >= params.max_depth
        or n < params.min_samples
        or dft.node_impurity(targets, loss) < params.min_loss
    ):
        return _make_leaf(targets, loss, depth)
    outcome = split_node(features_sub, targets, loss, params, rng)
    if outcome is None:
        return _make_leaf(targets, loss, depth)
    splits, cells = outcome
    children = {}
    for key in sorted(cells):
        idx = cells[key]
        children[key] = _grow(
            features_sub[idx], targets[idx], loss, params, depth + 1, rng
        )
    return InternalNode(depth=depth, n_samples=n, splits=splits, children=children)


def _fallback_key(node: InternalNode, key: tuple[int, ...]) -> tuple[int, ...]:
    """Nearest existing cell for a sign vector unseen in training."""
    def rank(k):
        child = node.children[k]
        hamming = sum(a != b for a, b in zip(k, key))
        return (hamming, -child.n_samples, k)

    return min(node.children, key=rank)


def predict(tree: SLMTree, features: np.ndarray):
    """Predict a batch of rows.

    Classification returns (labels, probabilities); regression returns
    values. Ties in a leaf histogram go to the smallest class id.
    """
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    if single:
        features = features[None, :]
    if features.shape[1] != tree.n_features:
        raise ValueError(
            f"dimension mismatch: model expects {tree.n_features} features, "
            f"got {features.shape[1]}"
        )
    if not np.isfinite(features).all():
        raise ValueError("features contain NaN or Inf")
    n = features.shape[0]
    sub = features[:, tree.d0_dims]
    if tree.task == CLASSIFICATION:
        probs = np.empty((n, tree.n_classes))
        _route(tree.root, sub, np.arange(n), probs, None)
        labels = np.argmax(probs, axis=1)
        if single:
            return int(labels[0]), probs[0]
        return labels, probs
    values = np.empty(n)
    _route(tree.root, sub, np.arange(n), None, values)
    if single:
        return float(values[0])
    return values


def _route(node, sub, idx, probs, values):
    if isinstance(node, LeafNode):
        if probs is not None:
            probs[idx] = node.histogram / node.histogram.sum()
        else:
            values[idx] = node.value
        return
    bits = _sign_bits(sub[idx], node.splits)
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, key in enumerate(map(tuple, bits)):
        groups.setdefault(key, []).append(i)
    for key, rows in groups.items():
        child_key = key if key in node.children else _fallback_key(node, key)
        _route(node.children[child_key], sub, idx[np.array(rows)], probs, values)


def param_count(tree: SLMTree) -> int:
    """Total parameters: each hyperplane costs d0 weights plus a threshold."""
    d0 = len(tree.d0_dims)
    total = 0
    for node in _walk(tree.root):
        if isinstance(node, InternalNode):
            total += len(node.splits) * (d0 + 1)
    return total


@dataclass(frozen=True)
class TreeStats:
    depth: int
    nodes_per_level: tuple[int, ...]
    n_partitions: int
    n_leaves: int


def tree_stats(tree: SLMTree) -> TreeStats:
    depth = 0
    levels: dict[int, int] = {}
    partitions = 0
    leaves = 0
    for node in _walk(tree.root):
        levels[node.depth] = levels.get(node.depth, 0) + 1
        depth = max(depth, node.depth)
        if isinstance(node, InternalNode):
            partitions += len(node.splits)
        else:
            leaves += 1
    return TreeStats(
        depth=depth,
        nodes_per_level=tuple(levels[d] for d in range(depth + 1)),
        n_partitions=partitions,
        n_leaves=leaves,
    )


def _walk(node):
    yield node
    if isinstance(node, InternalNode):
        for key in sorted(node.children):
            yield from _walk(node.children[key])
