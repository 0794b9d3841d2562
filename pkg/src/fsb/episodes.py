"""Episode sampling and accuracy aggregation.

An episode is one m-way n-shot task: m classes, n support rows per class,
k disjoint query rows per class.  Sampling episode ``i`` of a run seeded
with ``base_seed`` is a pure function of ``mix(base_seed, i)``:

    stream = SplitMix64(mix(base_seed, i))
    classes = first m of a Fisher-Yates shuffle of the sorted class ids
    per class: first n + k of a Fisher-Yates shuffle of that class's
    sorted row indices; the first n are support, the next k are query

so any number of workers, in any order, reproduces the same episodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassTooSmall, EmptyInput, NotEnoughClasses
from .feature_store import FeatureLibrary
from .rng import SplitMix64, mix

DEFAULT_EPISODES = 600
DEFAULT_QUERIES = 15


@dataclass(frozen=True)
class EpisodeSpec:
    """Parameters of an episodic evaluation run."""

    ways: int
    shots: int
    queries: int = DEFAULT_QUERIES
    episodes: int = DEFAULT_EPISODES
    base_seed: int = 0

    def __post_init__(self):
        if self.ways < 2:
            raise ValueError(f"ways must be >= 2, got {self.ways}")
        if self.shots < 1 or self.queries < 1 or self.episodes < 1:
            raise ValueError("shots, queries and episodes must be >= 1")


@dataclass(frozen=True)
class Episode:
    """A concrete sampled task.

    ``support_rows`` and ``query_rows`` have shapes (ways, shots) and
    (ways, queries); row ``[c, :]`` belongs to ``class_ids[c]``, and the
    episode-local label of that class is ``c``.  ``key`` is the seed of the
    stream that produced the episode (useful for audit dumps and for
    deriving the per-episode training seed).
    """

    class_ids: tuple
    support_rows: np.ndarray
    query_rows: np.ndarray
    episode_index: int
    key: int

    @property
    def ways(self) -> int:
        return len(self.class_ids)

    def support_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.ways), self.support_rows.shape[1])

    def query_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.ways), self.query_rows.shape[1])

    def flat_support(self) -> np.ndarray:
        return self.support_rows.reshape(-1)

    def flat_query(self) -> np.ndarray:
        return self.query_rows.reshape(-1)


@dataclass(frozen=True)
class AccuracySummary:
    """Mean accuracy with the 95% confidence half-width over episodes."""

    mean: float
    ci95: float
    per_episode: tuple


def sample_episode(lib: FeatureLibrary, spec: EpisodeSpec, episode_index: int) -> Episode:
    """Deterministically sample episode ``episode_index`` of the run."""
    class_ids = lib.class_ids
    if len(class_ids) < spec.ways:
        raise NotEnoughClasses(len(class_ids), spec.ways)
    key = mix(spec.base_seed, episode_index)
    stream = SplitMix64(key)
    chosen = stream.shuffle_prefix(list(class_ids), spec.ways)
    need = spec.shots + spec.queries
    support = np.empty((spec.ways, spec.shots), dtype=np.int64)
    query = np.empty((spec.ways, spec.queries), dtype=np.int64)
    for c, class_id in enumerate(chosen):
        rows = sorted(int(r) for r in lib.class_index[class_id])
        if len(rows) < need:
            raise ClassTooSmall(class_id, len(rows), need)
        picked = stream.shuffle_prefix(rows, need)
        support[c] = picked[: spec.shots]
        query[c] = picked[spec.shots :]
    return Episode(
        class_ids=tuple(chosen),
        support_rows=support,
        query_rows=query,
        episode_index=episode_index,
        key=key,
    )


def iter_episodes(lib: FeatureLibrary, spec: EpisodeSpec):
    for i in range(spec.episodes):
        yield sample_episode(lib, spec, i)


def summarize(per_episode) -> AccuracySummary:
    """Mean and 95% CI half-width (1.96 * sample std / sqrt(E)).

    The sample standard deviation uses the E - 1 denominator; a single
    episode has no variance estimate and reports ci95 = 0.
    """
    values = [float(v) for v in per_episode]
    if not values:
        raise EmptyInput("no per-episode accuracies")
    e = len(values)
    mean = sum(values) / e
    if e == 1 or all(v == values[0] for v in values):
        ci = 0.0  # zero variance reports exactly zero, no rounding residue
    else:
        var = sum((v - mean) ** 2 for v in values) / (e - 1)
        ci = 1.96 * math.sqrt(var) / math.sqrt(e)
    return AccuracySummary(mean=mean, ci95=ci, per_episode=tuple(values))
