"""Dataset container, CSV ingestion, synthetic generators, and splitting.

All generators are deterministic given their seed and return features as
float64 with either integer class labels or float regression targets.
The synthetic 2D sets follow the usual benchmark shapes (Gaussian blob
inside a ring; interleaving half-circle moons); a chosen fraction of
samples additionally receives isotropic Gaussian jitter so the classes
overlap near the decision boundary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from slm.errors import (
    BadTargetError,
    DegenerateSplitError,
    EmptyFileError,
    MalformedRowError,
    NonNumericCellError,
    UnknownTargetColumnError,
)

CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    task: str
    n_classes: int | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", features)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ValueError(f"features must be a nonempty 2D matrix, got shape {features.shape}")
        if not np.isfinite(features).all():
            raise ValueError("features contain NaN or Inf")
        if self.task == CLASSIFICATION:
            target = np.asarray(self.target, dtype=np.int64)
            if self.n_classes is None or self.n_classes < 2:
                raise ValueError("classification dataset needs an explicit n_classes >= 2")
            if target.min() < 0 or target.max() >= self.n_classes:
                raise ValueError(
                    f"labels must lie in [0, {self.n_classes}), "
                    f"got range [{target.min()}, {target.max()}]"
                )
        elif self.task == REGRESSION:
            target = np.asarray(self.target, dtype=np.float64)
            if not np.isfinite(target).all():
                raise ValueError("regression targets contain NaN or Inf")
        else:
            raise ValueError(f"unknown task: {self.task!r}")
        object.__setattr__(self, "target", target)
        if target.shape != (features.shape[0],):
            raise ValueError("target length does not match number of samples")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != features.shape[1]:
                raise ValueError("feature_names length does not match feature count")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return replace(
            self, features=self.features[indices], target=self.target[indices]
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    seed: int = 0
    stratify: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def load_csv(path, target_column, task: str, has_header: bool = True) -> Dataset:
    """Read a comma-separated file into a Dataset.

    The target column may be named (header required) or given as a 0-based
    index. Lines starting with '#' are skipped, which is how slm-written
    CSVs carry their provenance comment. Row numbers in errors are 1-based
    over data rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise EmptyFileError(path)

    header = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise EmptyFileError(path)

    n_cols = len(rows[0])
    if isinstance(target_column, int) and not isinstance(target_column, bool):
        t_idx = target_column
        if not 0 <= t_idx < n_cols:
            raise UnknownTargetColumnError(target_column, f"0..{n_cols - 1}")
    else:
        if header is None:
            raise UnknownTargetColumnError(target_column, "(file has no header)")
        if target_column not in header:
            raise UnknownTargetColumnError(target_column, header)
        t_idx = header.index(target_column)

    def col_name(j):
        return header[j] if header is not None else str(j)

    features = np.empty((len(rows), n_cols - 1), dtype=np.float64)
    raw_targets = []
    for i, row in enumerate(rows, start=1):
        if len(row) != n_cols:
            raise MalformedRowError(i, n_cols, len(row))
        k = 0
        for j, cell in enumerate(row):
            if j == t_idx:
                raw_targets.append((i, cell.strip()))
                continue
            try:
                features[i - 1, k] = float(cell)
            except ValueError:
                raise NonNumericCellError(i, col_name(j), cell) from None
            k += 1

    if task == CLASSIFICATION:
        labels = np.empty(len(raw_targets), dtype=np.int64)
        for n, (i, text) in enumerate(raw_targets):
            try:
                labels[n] = int(text)
            except ValueError:
                raise BadTargetError(i, text, "expected an integer class id") from None
            if labels[n] < 0:
                raise BadTargetError(i, text, "class ids must be >= 0")
        target = labels
        n_classes = int(labels.max()) + 1 if labels.size else 0
        n_classes = max(n_classes, 2)
    else:
        target = np.empty(len(raw_targets), dtype=np.float64)
        for n, (i, text) in enumerate(raw_targets):
            try:
                target[n] = float(text)
            except ValueError:
                raise BadTargetError(i, text, "expected a real number") from None
        n_classes = None

    names = None
    if header is not None:
        names = tuple(h for j, h in enumerate(header) if j != t_idx)
    return Dataset(
        features=features,
        target=target,
        task=task,
        n_classes=n_classes,
        feature_names=names,
    )


def save_csv(ds: Dataset, path, target_name: str = "target", comment: str | None = None):
    """Write a Dataset in the dialect load_csv reads back."""
    names = ds.feature_names or tuple(f"x{j}" for j in range(ds.n_features))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write("# " + comment.replace("\n", " ") + "\n")
        writer = csv.writer(fh)
        writer.writerow(list(names) + [target_name])
        for i in range(ds.n_samples):
            row = [repr(float(v)) for v in ds.features[i]]
            if ds.task == CLASSIFICATION:
                row.append(str(int(ds.target[i])))
            else:
                row.append(repr(float(ds.target[i])))
            writer.writerow(row)


def _apply_boundary_jitter(rng, points, noise_fraction, jitter_std):
    """Jitter a uniformly chosen fraction of the samples in place."""
    n = points.shape[0]
    n_noisy = int(round(n * noise_fraction))
    if n_noisy == 0 or jitter_std <= 0:
        return
    idx = rng.choice(n, size=n_noisy, replace=False)
    points[idx] += rng.normal(scale=jitter_std, size=(n_noisy, points.shape[1]))


def gen_circle_and_ring(
    n_per_class: int,
    noise_fraction: float,
    seed: int,
    blob_std: float = 0.38,
    ring_radius: float = 1.0,
    ring_std: float = 0.08,
    jitter_std: float = 0.25,
) -> Dataset:
    """Inner Gaussian blob (class 0) inside a ring-shaped class 1."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if not 0.0 <= noise_fraction <= 1.0:
        raise ValueError("noise_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    blob = rng.normal(scale=blob_std, size=(n_per_class, 2))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n_per_class)
    radii = rng.normal(loc=ring_radius, scale=ring_std, size=n_per_class)
    ring = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    points = np.vstack([blob, ring])
    _apply_boundary_jitter(rng, points, noise_fraction, jitter_std)
    labels = np.repeat(np.array([0, 1], dtype=np.int64), n_per_class)
    return Dataset(
        features=points,
        target=labels,
        task=CLASSIFICATION,
        n_classes=2,
        feature_names=("x0", "x1"),
    )


def gen_moons(
    n_moons: int,
    n_per_class: int,
    noise_fraction: float,
    seed: int,
    base_noise: float = 0.10,
    jitter_std: float | None = None,
) -> Dataset:
    """Interleaving half-circle moons, one class per moon.

    Moons 0/1 form the usual upper/lower pair; moons 2/3 repeat the pair
    shifted right. Every sample gets small coordinate noise;
    noise_fraction of samples get extra jitter. The default jitter is
    calibrated per layout (the four-moon arrangement packs boundaries
    closer, so its default is smaller).
    """
    if n_moons not in (2, 4):
        raise ValueError(f"n_moons must be 2 or 4, got {n_moons}")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if not 0.0 <= noise_fraction <= 1.0:
        raise ValueError("noise_fraction must be in [0, 1]")
    if jitter_std is None:
        jitter_std = 0.50 if n_moons == 2 else 0.28
    rng = np.random.default_rng(seed)
    chunks = []
    for k in range(n_moons):
        t = rng.uniform(0.0, math.pi, size=n_per_class)
        shift = 2.5 * (k // 2)
        if k % 2 == 0:
            xy = np.column_stack([np.cos(t) + shift, np.sin(t)])
        else:
            xy = np.column_stack([1.0 - np.cos(t) + shift, 0.5 - np.sin(t)])
        chunks.append(xy)
    points = np.vstack(chunks)
    points += rng.normal(scale=base_noise, size=points.shape)
    _apply_boundary_jitter(rng, points, noise_fraction, jitter_std)
    labels = np.repeat(np.arange(n_moons, dtype=np.int64), n_per_class)
    return Dataset(
        features=points,
        target=labels,
        task=CLASSIFICATION,
        n_classes=n_moons,
        feature_names=("x0", "x1"),
    )


def gen_friedman(
    variant: int,
    n: int,
    n_features: int = 10,
    seed: int = 0,
    noise_std: float | None = None,
    unit_range: bool = False,
) -> Dataset:
    """Standard Friedman regression benchmarks.

    Variant 1 uses n_features uniform [0,1] inputs of which only the first
    five drive the target (noise_std defaults to 1). Variants 2 and 3 have
    four inputs on the customary wide ranges (noise_std defaults to 0);
    unit_range=True draws them on [0,1] instead.
    """
    if variant not in (1, 2, 3):
        raise ValueError(f"variant must be 1, 2 or 3, got {variant}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if variant == 1:
        if n_features <= 5:
            raise ValueError(f"friedman-1 needs n_features > 5, got {n_features}")
        if noise_std is None:
            noise_std = 1.0
        x = rng.uniform(size=(n, n_features))
        y = (
            10.0 * np.sin(np.pi * x[:, 0] * x[:, 1])
            + 20.0 * (x[:, 2] - 0.5) ** 2
            + 10.0 * x[:, 3]
            + 5.0 * x[:, 4]
        )
        if noise_std > 0:
            y = y + rng.normal(scale=noise_std, size=n)
        d = n_features
    else:
        if noise_std is None:
            noise_std = 0.0
        x = rng.uniform(size=(n, 4))
        if not unit_range:
            lo = np.array([0.0, 40.0 * math.pi, 0.0, 1.0])
            hi = np.array([100.0, 560.0 * math.pi, 1.0, 11.0])
            x = lo + x * (hi - lo)
        term = x[:, 1] * x[:, 2] - 1.0 / (x[:, 1] * x[:, 3])
        if variant == 2:
            y = np.sqrt(x[:, 0] ** 2 + term**2)
        else:
            y = np.arctan(term / x[:, 0])
        if noise_std > 0:
            y = y + rng.normal(scale=noise_std, size=n)
        d = 4
    return Dataset(
        features=x,
        target=y,
        task=REGRESSION,
        feature_names=tuple(f"x{j}" for j in range(d)),
    )


def train_test_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic split; stratified by class for classification.

    Stratification uses largest-remainder rounding so each class's train
    count is within one of its proportional quota while the total equals
    floor(L * train_fraction).
    """
    n = ds.n_samples
    n_train = int(math.floor(n * spec.train_fraction + 1e-9))
    if n_train < 1 or n - n_train < 1:
        raise DegenerateSplitError(
            f"split of {n} samples at fraction {spec.train_fraction} leaves an empty side"
        )
    rng = np.random.default_rng(spec.seed)
    if ds.task == CLASSIFICATION and spec.stratify:
        train_idx = _stratified_indices(ds.target, n_train, spec.train_fraction, rng)
    else:
        train_idx = rng.permutation(n)[:n_train]
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    if mask.all() or not mask.any():
        raise DegenerateSplitError("split produced an empty side")
    return ds.subset(np.flatnonzero(mask)), ds.subset(np.flatnonzero(~mask))


def _stratified_indices(labels, n_train, fraction, rng):
    classes = np.unique(labels)
    quotas = {}
    base_total = 0
    for c in classes:
        q = int(np.sum(labels == c)) * fraction
        quotas[int(c)] = q
        base_total += int(math.floor(q + 1e-9))
    take = {c: int(math.floor(q + 1e-9)) for c, q in quotas.items()}
    remainders = sorted(
        ((q - take[c], c) for c, q in quotas.items()),
        key=lambda t: (-t[0], t[1]),
    )
    for _, c in remainders[: max(n_train - base_total, 0)]:
        take[c] += 1
    picks = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.shape[0])]
        picks.append(idx[: take[int(c)]])
    return np.concatenate(picks)
