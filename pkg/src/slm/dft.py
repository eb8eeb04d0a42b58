"""Discriminant feature test: score a projected 1D subspace by the best
achievable split loss over uniformly binned candidate thresholds.

Samples with projected value < t go left, >= t go right. Supported losses:
weighted entropy (classification), weighted per-side MSE (regression), and
a second-order boosting gain where the per-side score is G^2/(H+lam) and
lower (more negative) totals are better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from slm import _kernels


@dataclass(frozen=True)
class EntropyLoss:
    n_classes: int
    name = "entropy"


@dataclass(frozen=True)
class MseLoss:
    name = "mse"


@dataclass(frozen=True)
class XgbGainLoss:
    lam: float = 0.0
    name = "xgb_gain"


LossKind = EntropyLoss | MseLoss | XgbGainLoss


@dataclass(frozen=True)
class SplitEvaluation:
    """Outcome of evaluating one threshold (or the best of many).

    An infeasible evaluation (empty side, or a constant column) carries
    loss = +inf and empty sides; callers skip it rather than handle errors.
    """

    threshold: float
    loss: float
    n_left: int
    n_right: int

    @property
    def feasible(self) -> bool:
        return self.n_left > 0 and self.n_right > 0


INFEASIBLE = SplitEvaluation(threshold=float("nan"), loss=float("inf"), n_left=0, n_right=0)


@dataclass(frozen=True)
class ProjectedColumn:
    """Projected values f(a) = a.x for one candidate direction."""

    values: np.ndarray
    f_min: float
    f_max: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> "ProjectedColumn":
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, f_min=float(values.min()), f_max=float(values.max()))


def project(a: np.ndarray, features: np.ndarray) -> ProjectedColumn:
    """Project every row of `features` onto direction `a`."""
    a = np.asarray(a, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or a.ndim != 1 or a.shape[0] != features.shape[1]:
        raise ValueError(
            f"dimension mismatch: vector has {a.shape[0] if a.ndim == 1 else a.shape} "
            f"entries, matrix has {features.shape[1]} columns"
        )
    return ProjectedColumn.from_values(features @ a)


def candidate_thresholds(col: ProjectedColumn, bins: int) -> np.ndarray:
    """Interior boundaries of `bins` uniform bins over [f_min, f_max].

    Empty for a degenerate column. The expression below is the single
    source of truth for threshold values; the scan kernels reproduce it.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if not col.f_max > col.f_min:
        return np.empty(0, dtype=np.float64)
    w = (col.f_max - col.f_min) / bins
    return col.f_min + np.arange(1, bins) * w


def entropy(labels: np.ndarray, n_classes: int) -> float:
    """Shannon entropy (natural log) of a label multiset."""
    labels = _as_labels(labels)
    if labels.shape[0] == 0:
        raise ValueError("entropy of an empty label set is undefined")
    counts = np.bincount(labels, minlength=n_classes)
    p = counts[counts > 0] / labels.shape[0]
    return float(-np.sum(p * np.log(p)))


def split_loss(
    col: ProjectedColumn,
    targets: np.ndarray,
    threshold: float,
    loss_kind: LossKind,
) -> SplitEvaluation:
    """Evaluate a single threshold directly (reference path, not binned)."""
    if not np.isfinite(threshold):
        raise ValueError(f"threshold must be finite, got {threshold}")
    targets = np.asarray(targets)
    if targets.shape[0] != col.values.shape[0]:
        raise ValueError("targets length does not match column length")
    left = col.values < threshold
    n_left = int(left.sum())
    n_right = col.values.shape[0] - n_left
    if n_left == 0 or n_right == 0:
        return INFEASIBLE
    total = col.values.shape[0]
    p_l = n_left / total
    p_r = n_right / total
    if isinstance(loss_kind, EntropyLoss):
        labels = _as_labels(targets)
        loss = p_l * entropy(labels[left], loss_kind.n_classes) + p_r * entropy(
            labels[~left], loss_kind.n_classes
        )
    elif isinstance(loss_kind, MseLoss):
        y = targets.astype(np.float64, copy=False)
        loss = p_l * _mse(y[left]) + p_r * _mse(y[~left])
    elif isinstance(loss_kind, XgbGainLoss):
        g, h = _as_grad_pair(targets)
        loss = -(
            _gain_score(g[left], h[left], loss_kind.lam)
            + _gain_score(g[~left], h[~left], loss_kind.lam)
        )
    else:
        raise TypeError(f"unknown loss kind: {loss_kind!r}")
    return SplitEvaluation(threshold=float(threshold), loss=float(loss), n_left=n_left, n_right=n_right)


def dft_cost(
    col: ProjectedColumn,
    targets: np.ndarray,
    bins: int,
    loss_kind: LossKind,
) -> SplitEvaluation:
    """Minimum split loss over all candidate thresholds.

    Ties go to the smallest threshold. A degenerate column, or one where
    every boundary empties a side, returns the infeasible marker.
    """
    if col.values.shape[0] < 2:
        raise ValueError("discriminant feature test needs at least 2 samples")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    values = np.ascontiguousarray(col.values, dtype=np.float64)
    if isinstance(loss_kind, EntropyLoss):
        out = _kernels.scan_entropy(
            values, _as_labels(targets), loss_kind.n_classes, bins, col.f_min, col.f_max
        )
    elif isinstance(loss_kind, MseLoss):
        y = np.ascontiguousarray(targets, dtype=np.float64)
        out = _kernels.scan_mse(values, y, bins, col.f_min, col.f_max)
    elif isinstance(loss_kind, XgbGainLoss):
        g, h = _as_grad_pair(targets)
        out = _kernels.scan_gain(values, g, h, loss_kind.lam, bins, col.f_min, col.f_max)
    else:
        raise TypeError(f"unknown loss kind: {loss_kind!r}")
    return _wrap_scan(out)


def dft_cost_many(
    columns: np.ndarray,
    targets: np.ndarray,
    bins: int,
    loss_kind: LossKind,
) -> list[SplitEvaluation]:
    """Batched dft_cost: one evaluation per row of `columns`."""
    columns = np.ascontiguousarray(columns, dtype=np.float64)
    if columns.ndim != 2:
        raise ValueError("columns must be 2D (candidates x samples)")
    if columns.shape[1] < 2:
        raise ValueError("discriminant feature test needs at least 2 samples")
    if isinstance(loss_kind, EntropyLoss):
        loss, thr, nl, nr = _kernels.scan_entropy_many(
            columns, _as_labels(targets), loss_kind.n_classes, bins
        )
    elif isinstance(loss_kind, MseLoss):
        y = np.ascontiguousarray(targets, dtype=np.float64)
        loss, thr, nl, nr = _kernels.scan_mse_many(columns, y, bins)
    elif isinstance(loss_kind, XgbGainLoss):
        g, h = _as_grad_pair(targets)
        loss, thr, nl, nr = _kernels.scan_gain_many(columns, g, h, loss_kind.lam, bins)
    else:
        raise TypeError(f"unknown loss kind: {loss_kind!r}")
    return [
        _wrap_scan((loss[i], thr[i], nl[i], nr[i])) for i in range(columns.shape[0])
    ]


def rank_features(
    features: np.ndarray,
    targets: np.ndarray,
    bins: int,
    loss_kind: LossKind,
) -> tuple[np.ndarray, np.ndarray]:
    """Order dimensions by ascending per-dimension split cost.

    Returns (order, costs) where order[i] is the original index of the
    i-th best dimension and costs are in original dimension order. Ties
    keep the original index order; undiscriminating dimensions score +inf.
    """
    features = np.asarray(features, dtype=np.float64)
    evals = dft_cost_many(features.T, targets, bins, loss_kind)
    costs = np.array([e.loss for e in evals])
    order = np.argsort(costs, kind="stable")
    return order, costs


def node_impurity(targets: np.ndarray, loss_kind: LossKind) -> float:
    """Loss of a node's own targets, in the split-loss family.

    For the gain loss this is the h-weighted variance of the per-sample
    Newton targets -g/h, which reduces to plain residual MSE when h = 1.
    """
    if isinstance(loss_kind, EntropyLoss):
        return entropy(targets, loss_kind.n_classes)
    if isinstance(loss_kind, MseLoss):
        return _mse(np.asarray(targets, dtype=np.float64))
    if isinstance(loss_kind, XgbGainLoss):
        g, h = _as_grad_pair(targets)
        big_g = float(np.sum(g))
        big_h = float(np.sum(h))
        if big_h <= 0:
            return 0.0
        spread = float(np.sum(g * g / h)) - big_g * big_g / big_h
        return max(spread, 0.0) / big_h
    raise TypeError(f"unknown loss kind: {loss_kind!r}")


def split_reference_loss(targets: np.ndarray, loss_kind: LossKind) -> float:
    """Node-level quantity comparable to a SplitEvaluation loss.

    Used by the non-improving-split stop: a split is accepted only when
    its loss beats this value. For entropy/mse it equals node_impurity;
    for gain it is -G^2/(H+lam), the unsplit structure score.
    """
    if isinstance(loss_kind, XgbGainLoss):
        g, h = _as_grad_pair(targets)
        return -_gain_score(g, h, loss_kind.lam)
    return node_impurity(targets, loss_kind)


def leaf_value(targets: np.ndarray, loss_kind: LossKind):
    """Leaf payload: class histogram, target mean, or Newton weight."""
    if isinstance(loss_kind, EntropyLoss):
        return np.bincount(_as_labels(targets), minlength=loss_kind.n_classes)
    if isinstance(loss_kind, MseLoss):
        return float(np.mean(targets))
    if isinstance(loss_kind, XgbGainLoss):
        g, h = _as_grad_pair(targets)
        denom = float(np.sum(h)) + loss_kind.lam
        if denom <= 0:
            return 0.0
        return float(-np.sum(g) / denom)
    raise TypeError(f"unknown loss kind: {loss_kind!r}")


def _wrap_scan(out) -> SplitEvaluation:
    loss, thr, n_left, n_right = out
    if n_left == 0 or n_right == 0:
        return INFEASIBLE
    return SplitEvaluation(
        threshold=float(thr), loss=float(loss), n_left=int(n_left), n_right=int(n_right)
    )


def _as_labels(targets) -> np.ndarray:
    return np.ascontiguousarray(targets, dtype=np.int64)


def _as_grad_pair(targets) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(targets, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("gain loss expects targets of shape (n, 2): columns g, h")
    g = np.ascontiguousarray(arr[:, 0])
    h = np.ascontiguousarray(arr[:, 1])
    return g, h


def _mse(y: np.ndarray) -> float:
    n = y.shape[0]
    s = float(np.sum(y))
    q = float(np.sum(y * y))
    sse = max(q - s * s / n, 0.0)
    return sse / n


def _gain_score(g: np.ndarray, h: np.ndarray, lam: float) -> float:
    big_g = float(np.sum(g))
    denom = float(np.sum(h)) + lam
    if denom <= 0:
        return 0.0
    return big_g * big_g / denom
