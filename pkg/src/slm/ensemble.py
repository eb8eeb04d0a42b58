"""Forest (independent diversified trees) and second-order gradient
boosting over oblique trees, for classification and regression.

Forest trees see the full data and full feature set; diversity comes only
from each tree's private random stream feeding the probabilistic
projection search. Boosting follows the usual additive scheme: per round,
first and second derivatives (g, h) of the loss at the current prediction
drive a gain-split tree whose leaves store -G/(H+lam); the learning rate
scales each tree's contribution at aggregation time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from slm import tree as tree_mod
from slm.data import CLASSIFICATION, REGRESSION, Dataset
from slm.errors import TrainingError
from slm.tree import SLMTree, TreeParams

FOREST = "forest"
BOOST = "boost"

_PROB_CLIP = 1e-12


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 20
    tree: TreeParams = field(default_factory=TreeParams)
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


@dataclass(frozen=True)
class BoostParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    lam: float = 0.0
    tree: TreeParams = field(default_factory=TreeParams)
    base_score: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        object.__setattr__(self, "tree", replace(self.tree, loss_kind="xgb_gain"))


@dataclass(frozen=True)
class EnsembleModel:
    kind: str
    task: str
    n_features: int
    trees: tuple[SLMTree, ...]
    n_classes: int | None = None
    learning_rate: float = 1.0
    base_score: float = 0.0
    seed: int = 0

    @property
    def trees_per_round(self) -> int:
        # multiclass boosting grows one tree per class per round
        if self.kind == BOOST and self.task == CLASSIFICATION and self.n_classes > 2:
            return self.n_classes
        return 1


@dataclass(frozen=True)
class LearningCurve:
    metric: str
    values: tuple[float, ...]

    def rows(self):
        return list(enumerate(self.values, start=1))


def _tree_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def fit_forest(train: Dataset, params: ForestParams) -> EnsembleModel:
    """Train n_trees trees on the full data with independent rng streams."""
    rngs = _tree_rngs(params.seed, params.n_trees)
    trees = tuple(tree_mod.build_tree(train, params.tree, rng) for rng in rngs)
    return EnsembleModel(
        kind=FOREST,
        task=train.task,
        n_features=train.n_features,
        trees=trees,
        n_classes=train.n_classes,
        seed=params.seed,
    )


def _vote_matrix(model: EnsembleModel, features: np.ndarray) -> np.ndarray:
    votes = np.zeros((features.shape[0], model.n_classes), dtype=np.int64)
    for t in model.trees:
        labels, _ = tree_mod.predict(t, features)
        votes[np.arange(features.shape[0]), labels] += 1
    return votes


def _mean_over_trees(outputs: np.ndarray) -> np.ndarray:
    # fsum keeps the mean invariant under tree reordering
    n_trees = outputs.shape[0]
    return np.array([math.fsum(outputs[:, i]) for i in range(outputs.shape[1])]) / n_trees


def predict_forest(model: EnsembleModel, features: np.ndarray):
    """Majority vote (classification) or mean (regression) over trees."""
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    if single:
        features = features[None, :]
    if model.task == CLASSIFICATION:
        votes = _vote_matrix(model, features)
        labels = np.argmax(votes, axis=1)
        probs = votes / len(model.trees)
        if single:
            return int(labels[0]), probs[0]
        return labels, probs
    outputs = np.stack([tree_mod.predict(t, features) for t in model.trees])
    values = _mean_over_trees(outputs)
    if single:
        return float(values[0])
    return values


def forest_curve(model: EnsembleModel, features: np.ndarray, target: np.ndarray) -> LearningCurve:
    """Cumulative-vote accuracy (or running-mean RMSE) after each tree."""
    features = np.asarray(features, dtype=np.float64)
    values = []
    if model.task == CLASSIFICATION:
        votes = np.zeros((features.shape[0], model.n_classes), dtype=np.int64)
        for t in model.trees:
            labels, _ = tree_mod.predict(t, features)
            votes[np.arange(features.shape[0]), labels] += 1
            values.append(float(np.mean(np.argmax(votes, axis=1) == target)))
        return LearningCurve(metric="accuracy", values=tuple(values))
    outputs = np.stack([tree_mod.predict(t, features) for t in model.trees])
    for k in range(1, outputs.shape[0] + 1):
        mean_k = _mean_over_trees(outputs[:k])
        values.append(float(np.sqrt(np.mean((mean_k - target) ** 2))))
    return LearningCurve(metric="rmse", values=tuple(values))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _clip_probs(p):
    return np.clip(p, _PROB_CLIP, 1.0 - _PROB_CLIP)


def squared_loss(score, y):
    """Per-sample training loss for regression boosting."""
    return 0.5 * (score - y) ** 2


def squared_gradients(score, y):
    """(g, h) of squared_loss at the current score."""
    return score - y, np.ones_like(score)


def logloss(score, y):
    """Per-sample log loss of a logit score against 0/1 targets."""
    p = _clip_probs(_sigmoid(score))
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def logloss_gradients(score, y):
    """(g, h) of logloss at the current logit; probabilities are clipped
    away from 0/1 so h stays positive."""
    p = _clip_probs(_sigmoid(score))
    return p - y, p * (1.0 - p)


def softmax_gradients(scores, onehot):
    """Per-class (g, h) of the softmax log loss; shapes (n, k)."""
    probs = _softmax(scores)
    p = _clip_probs(probs)
    return probs - onehot, p * (1.0 - p)


def _check_finite(arrays, round_idx):
    for a in arrays:
        if not np.isfinite(a).all():
            raise TrainingError(f"round {round_idx}: non-finite boosting gradients")


def fit_boost(train: Dataset, params: BoostParams) -> tuple[EnsembleModel, LearningCurve]:
    """Additive boosting; returns the model and its training-loss curve."""
    x = train.features
    n = train.n_samples
    if train.task == REGRESSION:
        rngs = _tree_rngs(params.seed, params.n_rounds)
        y = train.target
        score = np.full(n, params.base_score)
        trees = []
        curve = []
        for t, rng in enumerate(rngs, start=1):
            g, h = squared_gradients(score, y)
            _check_finite((g,), t)
            booster = tree_mod.build_gradient_tree(
                x, g, h, params.lam, params.tree, rng
            )
            trees.append(booster)
            score = score + params.learning_rate * tree_mod.predict(booster, x)
            curve.append(float(np.mean((score - y) ** 2)))
        model = EnsembleModel(
            kind=BOOST,
            task=REGRESSION,
            n_features=train.n_features,
            trees=tuple(trees),
            learning_rate=params.learning_rate,
            base_score=params.base_score,
            seed=params.seed,
        )
        return model, LearningCurve(metric="mse", values=tuple(curve))

    k = train.n_classes
    y = train.target
    if k == 2:
        rngs = _tree_rngs(params.seed, params.n_rounds)
        score = np.zeros(n)
        trees = []
        curve = []
        y_float = y.astype(np.float64)
        for t, rng in enumerate(rngs, start=1):
            g, h = logloss_gradients(score, y_float)
            _check_finite((g, h), t)
            booster = tree_mod.build_gradient_tree(
                x, g, h, params.lam, params.tree, rng
            )
            trees.append(booster)
            score = score + params.learning_rate * tree_mod.predict(booster, x)
            curve.append(float(np.mean(logloss(score, y_float))))
    else:
        rngs = _tree_rngs(params.seed, params.n_rounds * k)
        scores = np.zeros((n, k))
        onehot = np.zeros((n, k))
        onehot[np.arange(n), y] = 1.0
        trees = []
        curve = []
        for t in range(1, params.n_rounds + 1):
            g_all, h_all = softmax_gradients(scores, onehot)
            for c in range(k):
                _check_finite((g_all[:, c], h_all[:, c]), t)
                booster = tree_mod.build_gradient_tree(
                    x, g_all[:, c], h_all[:, c], params.lam, params.tree,
                    rngs[(t - 1) * k + c],
                )
                trees.append(booster)
                scores[:, c] += params.learning_rate * tree_mod.predict(booster, x)
            probs = _clip_probs(_softmax(scores))
            curve.append(float(-np.mean(np.log(probs[np.arange(n), y]))))
    model = EnsembleModel(
        kind=BOOST,
        task=CLASSIFICATION,
        n_features=train.n_features,
        trees=tuple(trees),
        n_classes=k,
        learning_rate=params.learning_rate,
        base_score=0.0,
        seed=params.seed,
    )
    return model, LearningCurve(metric="logloss", values=tuple(curve))


def boost_scores(model: EnsembleModel, features: np.ndarray, n_rounds: int | None = None):
    """Accumulated raw scores after n_rounds rounds (all by default)."""
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    per_round = model.trees_per_round
    total_rounds = len(model.trees) // per_round if model.trees else 0
    if n_rounds is None:
        n_rounds = total_rounds
    if model.task == REGRESSION:
        if not model.trees or n_rounds == 0:
            return np.full(n, model.base_score)
        outputs = np.stack(
            [tree_mod.predict(t, features) for t in model.trees[:n_rounds]]
        )
        return model.base_score + model.learning_rate * np.sum(outputs, axis=0)
    k = model.n_classes
    scores = np.zeros((n, k))
    if per_round == 1:
        for t in model.trees[:n_rounds]:
            scores[:, 1] += model.learning_rate * tree_mod.predict(t, features)
        scores[:, 0] = -scores[:, 1]
        return scores
    for r in range(n_rounds):
        for c in range(k):
            t = model.trees[r * k + c]
            scores[:, c] += model.learning_rate * tree_mod.predict(t, features)
    return scores


def predict_boost(model: EnsembleModel, features: np.ndarray, n_rounds: int | None = None):
    """Sum of scaled tree outputs; sigmoid/softmax then argmax for
    classification."""
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    if single:
        features = features[None, :]
    scores = boost_scores(model, features, n_rounds)
    if model.task == REGRESSION:
        if single:
            return float(scores[0])
        return scores
    if model.trees_per_round == 1:
        p1 = _sigmoid(scores[:, 1])
        probs = np.column_stack([1.0 - p1, p1])
    else:
        probs = _softmax(scores)
    labels = np.argmax(probs, axis=1)
    if single:
        return int(labels[0]), probs[0]
    return labels, probs


def boost_curve(model: EnsembleModel, features: np.ndarray, target: np.ndarray) -> LearningCurve:
    """Staged metric after each round on the given data."""
    features = np.asarray(features, dtype=np.float64)
    per_round = model.trees_per_round
    total_rounds = len(model.trees) // per_round
    n = features.shape[0]
    values = []
    if model.task == REGRESSION:
        score = np.full(n, model.base_score)
        for r in range(total_rounds):
            score = score + model.learning_rate * tree_mod.predict(
                model.trees[r], features
            )
            values.append(float(np.mean((score - target) ** 2)))
        return LearningCurve(metric="mse", values=tuple(values))
    k = model.n_classes
    if per_round == 1:
        score = np.zeros(n)
        y_float = target.astype(np.float64)
        for r in range(total_rounds):
            score = score + model.learning_rate * tree_mod.predict(
                model.trees[r], features
            )
            values.append(float(np.mean(logloss(score, y_float))))
    else:
        scores = np.zeros((n, k))
        for r in range(total_rounds):
            for c in range(k):
                scores[:, c] += model.learning_rate * tree_mod.predict(
                    model.trees[r * k + c], features
                )
            probs = _clip_probs(_softmax(scores))
            values.append(float(-np.mean(np.log(probs[np.arange(n), target]))))
    return LearningCurve(metric="logloss", values=tuple(values))


def export_learning_curve(
    curve: LearningCurve,
    path,
    holdout: LearningCurve | None = None,
    comment: str | None = None,
):
    """Write a curve as CSV: (index, train metric[, holdout metric])."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write("# " + comment.replace("\n", " ") + "\n")
        writer = csv.writer(fh)
        header = ["index", f"train_{curve.metric}"]
        if holdout is not None:
            header.append(f"holdout_{holdout.metric}")
        writer.writerow(header)
        for i, v in curve.rows():
            row = [i, repr(v)]
            if holdout is not None:
                row.append(repr(holdout.values[i - 1]))
            writer.writerow(row)
