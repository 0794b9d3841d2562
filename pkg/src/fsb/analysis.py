"""Feature-importance analyses over trained linear heads.

The importance of feature j in a no-hidden-layer head is the L1 norm of
the output weights attached to it, sum_c |W2[c, j]|.  On top of that:

* Pearson correlation between the importance profiles of a one-shot head
  and a head trained on all rows of the same classes;
* the top-20% feature set, with Jaccard overlap between datasets (random
  20% subsets give an expected Jaccard of 0.04 / 0.36 = 0.111);
* the fraction of each extractor's column block inside the top set.

Probe heads (linear, unregularized) are trained with plain full-batch
gradient descent from zero weights, not with the Adam trainer used for
benchmarking: Adam's per-coordinate normalization moves every weight at
the same rate, which flattens |W| and erases the graded per-feature
profile these analyses measure, and a random init of the same magnitude
as the learned deltas would mask it too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import HeadModel, loss_and_grad
from .errors import (
    ConstantInput,
    DegenerateInput,
    HasHiddenLayer,
    LengthMismatch,
    UniverseMismatch,
)
from .feature_store import ExtractorLayout, FeatureLibrary, gather_rows
from .rng import SplitMix64, mix

TOP_FRACTION = 0.2


@dataclass(frozen=True)
class ProbeConfig:
    """Gradient-descent schedule for the linear importance probes."""

    learning_rate: float = 5e-3
    epochs: int = 200

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValueError("probe learning_rate must be > 0 and epochs >= 1")


def train_probe(X, y, ways: int, config: ProbeConfig = ProbeConfig()) -> HeadModel:
    """Linear softmax head, full-batch GD from zero weights."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).size != ways:
        missing = int(np.setdiff1d(np.arange(ways), np.unique(y))[0])
        raise DegenerateInput(missing)
    model = HeadModel(
        W1=None, b1=None, W2=np.zeros((ways, X.shape[1])), b2=np.zeros(ways)
    )
    for _ in range(config.epochs):
        _, grads = loss_and_grad(model, X, y, 0.0)
        model.W2 -= config.learning_rate * grads["W2"]
        model.b2 -= config.learning_rate * grads["b2"]
    return model


@dataclass(frozen=True)
class ImportanceProfile:
    values: np.ndarray  # length total_dim, all >= 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def total_dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class TopFeatureSet:
    """Indices of the top floor(0.2 * total_dim) features by importance."""

    indices: frozenset
    universe: int

    @property
    def size(self) -> int:
        return len(self.indices)


def importance(model: HeadModel) -> ImportanceProfile:
    """Per-feature L1 norm of the output weights of a linear head."""
    if model.hidden_size != 0:
        raise HasHiddenLayer(
            f"importance needs hidden_size 0, model has {model.hidden_size}"
        )
    return ImportanceProfile(np.abs(model.W2).sum(axis=0))


def top_feature_set(profile: ImportanceProfile, fraction: float = TOP_FRACTION) -> TopFeatureSet:
    """Top floor(fraction * dim) features; threshold ties go to smaller index."""
    size = int(math.floor(fraction * profile.total_dim))
    order = np.argsort(-profile.values, kind="stable")  # stable: ties keep index order
    return TopFeatureSet(
        indices=frozenset(int(i) for i in order[:size]), universe=profile.total_dim
    )


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} and {y.shape}")
    if x.size < 2:
        raise LengthMismatch("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx2 = float((dx * dx).sum())
    sy2 = float((dy * dy).sum())
    if sx2 == 0.0 or sy2 == 0.0:
        raise ConstantInput("correlation undefined for a constant vector")
    # sqrt(sx2 * sy2) rather than sqrt(sx2) * sqrt(sy2): the self-correlation
    # then rounds to exactly 1.0.
    return float((dx * dy).sum() / np.sqrt(sx2 * sy2))


def jaccard(a: TopFeatureSet, b: TopFeatureSet) -> float:
    """|a ∩ b| / |a ∪ b| over a shared feature universe."""
    if a.universe != b.universe:
        raise UniverseMismatch(f"universes differ: {a.universe} vs {b.universe}")
    union = len(a.indices | b.indices)
    if union == 0:
        return 1.0
    return len(a.indices & b.indices) / union


def extractor_share(top: TopFeatureSet, layout: ExtractorLayout) -> dict:
    """Per extractor: fraction of its column block inside the top set."""
    if layout.total_dim != top.universe:
        raise UniverseMismatch(
            f"layout covers {layout.total_dim}, top set universe {top.universe}"
        )
    shares = {}
    for name, offset, length in layout.blocks:
        inside = sum(1 for i in top.indices if offset <= i < offset + length)
        shares[name] = inside / length
    return shares


def _fit_probe(lib: FeatureLibrary, rows, labels, ways, config) -> ImportanceProfile:
    X = gather_rows(lib, rows)
    return importance(train_probe(X, labels, ways, config))


def _pick_classes(lib: FeatureLibrary, ways: int, stream: SplitMix64) -> list:
    return stream.shuffle_prefix(list(lib.class_ids), ways)


def correlation_experiment(
    lib: FeatureLibrary,
    ways: int,
    seed: int,
    config: ProbeConfig = ProbeConfig(),
) -> float:
    """Pearson r between one-shot and full-data importance profiles.

    Picks ``ways`` classes, trains a probe once on a single support row
    per class and once on every row of those classes, and correlates the
    two importance profiles.
    """
    stream = SplitMix64(mix(seed, 0))
    classes = _pick_classes(lib, ways, stream)

    one_rows, one_labels = [], []
    all_rows, all_labels = [], []
    for label, class_id in enumerate(classes):
        rows = sorted(int(r) for r in lib.class_index[class_id])
        pick = stream.shuffle_prefix(list(rows), 1)[0]
        one_rows.append(pick)
        one_labels.append(label)
        all_rows.extend(rows)
        all_labels.extend([label] * len(rows))

    one_shot = _fit_probe(lib, one_rows, one_labels, ways, config)
    full_data = _fit_probe(lib, all_rows, all_labels, ways, config)
    return pearson(one_shot.values, full_data.values)


def importance_tasks(
    lib: FeatureLibrary,
    ways: int,
    tasks: int,
    seed: int,
    config: ProbeConfig = ProbeConfig(),
) -> list:
    """Top-feature sets of ``tasks`` many m-way full-data probe heads."""
    out = []
    for t in range(tasks):
        stream = SplitMix64(mix(seed, t))
        classes = _pick_classes(lib, ways, stream)
        rows, labels = [], []
        for label, class_id in enumerate(classes):
            class_rows = sorted(int(r) for r in lib.class_index[class_id])
            rows.extend(class_rows)
            labels.extend([label] * len(class_rows))
        profile = _fit_probe(lib, rows, labels, ways, config)
        out.append(top_feature_set(profile))
    return out


def cross_dataset_heatmaps(
    libraries,
    layout: ExtractorLayout,
    ways: int,
    tasks: int,
    seed: int,
    config: ProbeConfig = ProbeConfig(),
) -> tuple:
    """Pairwise mean Jaccard matrix and per-dataset mean extractor shares.

    Libraries must share one column layout.  Task t of dataset d is seeded
    with mix(mix(seed, d), t); Jaccard is averaged over tasks paired by
    index, so the diagonal compares each task set with itself.
    """
    libraries = list(libraries)
    names = [lib.dataset_name for lib in libraries]
    tops = [
        importance_tasks(lib, ways, tasks, mix(seed, d), config)
        for d, lib in enumerate(libraries)
    ]
    n = len(libraries)
    matrix = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            matrix[a, b] = float(
                np.mean([jaccard(sa, sb) for sa, sb in zip(tops[a], tops[b])])
            )
    shares = {}
    for name, task_tops in zip(names, tops):
        per_task = [extractor_share(top, layout) for top in task_tops]
        shares[name] = {
            extractor: float(np.mean([p[extractor] for p in per_task]))
            for extractor, _, _ in layout.blocks
        }
    return names, matrix, shares
