"""Combination strategies over per-extractor heads.

Three ways to use a multi-extractor library on one episode:

* ``single``         one head on one member's columns
* ``hard_ensemble``  one head per member, majority vote over labels
* ``soft_ensemble``  one head per member, argmax of the mean probability
* ``full_library``   one head on the concatenation of all member columns

Ties always break toward the smallest class index, so results are
deterministic.  Every head trained within an episode shares the same
support/query split and the same training seed: with identical member
features this makes the trained heads identical, so an ensemble of copies
reproduces the single model exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import classifier
from .classifier import TrainConfig, train_head
from .episodes import Episode
from .errors import NotAProbability, ShapeMismatch, UnknownMember
from .feature_store import FeatureLibrary, gather_rows
from .rng import mix

VARIANTS = ("single", "hard_ensemble", "soft_ensemble", "full_library")

# Stream tag separating head initialization from episode sampling.
_TRAIN_STREAM = 1


@dataclass(frozen=True)
class MethodSpec:
    """A named combination strategy over library members.

    ``members`` lists member names; None means every member of the library
    (in library order).  ``average_logits`` switches the soft ensemble from
    probability averaging (the default) to logit averaging, kept only for
    ablation.
    """

    variant: str
    members: tuple | None = None
    average_logits: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.members is not None:
            object.__setattr__(self, "members", tuple(self.members))
            if self.variant == "single" and len(self.members) != 1:
                raise ValueError("single requires exactly one member")
            if self.variant.endswith("ensemble") and len(self.members) < 2:
                raise ValueError(f"{self.variant} requires at least two members")
        elif self.variant == "single":
            raise ValueError("single requires an explicit member name")

    def resolve_members(self, lib: FeatureLibrary) -> list:
        names = list(self.members) if self.members is not None else lib.member_names
        known = set(lib.member_names)
        for name in names:
            if name not in known:
                raise UnknownMember(name, known)
        return names

    def label(self) -> str:
        if self.variant == "single":
            return f"single:{self.members[0]}"
        return self.variant


def hard_vote(per_model_predictions) -> np.ndarray:
    """Majority vote per query; ties go to the smallest class index."""
    votes = np.asarray(per_model_predictions, dtype=np.int64)
    if votes.ndim != 2:
        raise ShapeMismatch(f"expected models x queries, got shape {votes.shape}")
    n_classes = int(votes.max()) + 1 if votes.size else 0
    out = np.empty(votes.shape[1], dtype=np.int64)
    for q in range(votes.shape[1]):
        counts = np.bincount(votes[:, q], minlength=n_classes)
        out[q] = int(np.argmax(counts))  # argmax returns the first (smallest) tie
    return out


def soft_vote(per_model_probabilities, check: bool = True) -> np.ndarray:
    """Argmax of the unweighted mean probability vector across models.

    ``check=False`` skips the row-sum validation; used for combining
    unnormalized scores such as averaged logits.
    """
    probs = np.asarray(per_model_probabilities, dtype=np.float64)
    if probs.ndim != 3:
        raise ShapeMismatch(
            f"expected models x queries x classes, got shape {probs.shape}"
        )
    if check:
        sums = probs.sum(axis=2)
        if not np.allclose(sums, 1.0, atol=1e-6):
            bad = np.argwhere(~np.isclose(sums, 1.0, atol=1e-6))[0]
            raise NotAProbability(
                f"model {bad[0]} query {bad[1]} probabilities sum to "
                f"{sums[tuple(bad)]:.6f}"
            )
        if probs.min() < -1e-12:
            raise NotAProbability("negative probability entry")
    return np.argmax(probs.mean(axis=0), axis=1)


def episode_train_config(config: TrainConfig, episode: Episode) -> TrainConfig:
    """Per-episode training seed, shared by every head of the episode."""
    return config.with_seed(mix(episode.key, _TRAIN_STREAM))


def method_predictions(
    lib: FeatureLibrary,
    episode: Episode,
    method: MethodSpec,
    config: TrainConfig,
) -> np.ndarray:
    """Episode-local predicted labels for the episode's query rows."""
    names = method.resolve_members(lib)
    y_support = episode.support_labels()
    cfg = episode_train_config(config, episode)

    if method.variant in ("single", "full_library"):
        selector = names if method.variant == "full_library" else names[:1]
        X_s = gather_rows(lib, episode.flat_support(), selector)
        X_q = gather_rows(lib, episode.flat_query(), selector)
        model, _ = train_head(X_s, y_support, episode.ways, cfg)
        return classifier.predict(model, X_q)

    per_model = []
    for name in names:
        X_s = gather_rows(lib, episode.flat_support(), [name])
        X_q = gather_rows(lib, episode.flat_query(), [name])
        model, _ = train_head(X_s, y_support, episode.ways, cfg)
        if method.variant == "hard_ensemble":
            per_model.append(classifier.predict(model, X_q))
        elif method.average_logits:
            hidden = X_q
            if model.W1 is not None:
                hidden = np.maximum(X_q @ model.W1.T + model.b1, 0.0)
            per_model.append(hidden @ model.W2.T + model.b2)
        else:
            per_model.append(classifier.predict_proba(model, X_q))
    if method.variant == "hard_ensemble":
        return hard_vote(np.stack(per_model))
    return soft_vote(np.stack(per_model), check=not method.average_logits)


def evaluate_method(
    lib: FeatureLibrary,
    episode: Episode,
    method: MethodSpec,
    config: TrainConfig,
) -> float:
    """Train the method on the episode's support rows, score its queries."""
    predicted = method_predictions(lib, episode, method, config)
    return float(np.mean(predicted == episode.query_labels()))


class BlockEnsembleClassifier(BaseEstimator, ClassifierMixin):
    """Scikit-learn estimator: one head per column block, combined by vote.

    ``blocks`` is a list of (name, offset, length) describing which columns
    of X belong to which extractor; it mirrors the layout produced by
    library assembly so the estimator can be used on plain matrices.
    """

    def __init__(
        self,
        blocks=None,
        voting: str = "soft",
        learning_rate: float = 5e-4,
        epochs: int = 100,
        hidden_size: int = 1024,
        l2_lambda: float = 0.1,
        seed: int = 0,
    ):
        self.blocks = blocks
        self.voting = voting
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.hidden_size = hidden_size
        self.l2_lambda = l2_lambda
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            hidden_size=self.hidden_size,
            l2_lambda=self.l2_lambda,
            seed=self.seed,
        )

    def _slices(self, width: int) -> list:
        blocks = self.blocks or [("all", 0, width)]
        end = blocks[-1][1] + blocks[-1][2]
        if end != width:
            raise ShapeMismatch(f"blocks cover {end} columns, X has {width}")
        return [(name, slice(off, off + length)) for name, off, length in blocks]

    def fit(self, X, y):
        if self.voting not in ("hard", "soft"):
            raise ValueError(f"voting must be 'hard' or 'soft', got {self.voting!r}")
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        cfg = self._config()
        self.models_ = [
            (name, train_head(X[:, cols], encoded, self.classes_.size, cfg)[0])
            for name, cols in self._slices(X.shape[1])
        ]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "models_"):
            raise NotFittedError("call fit before predict")
        X = np.asarray(X, dtype=np.float64)
        slices = self._slices(X.shape[1])
        if self.voting == "hard":
            stacked = np.stack(
                [
                    classifier.predict(model, X[:, cols])
                    for (_, model), (_, cols) in zip(self.models_, slices)
                ]
            )
            return self.classes_[hard_vote(stacked)]
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        if not hasattr(self, "models_"):
            raise NotFittedError("call fit before predict")
        X = np.asarray(X, dtype=np.float64)
        slices = self._slices(X.shape[1])
        stacked = np.stack(
            [
                classifier.predict_proba(model, X[:, cols])
                for (_, model), (_, cols) in zip(self.models_, slices)
            ]
        )
        return stacked.mean(axis=0)
