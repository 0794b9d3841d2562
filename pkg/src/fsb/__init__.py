"""Few-shot image classification over libraries of frozen feature extractors.

A feature library holds per-extractor embedding matrices for one dataset.
Episodes (m-way n-shot tasks) are sampled deterministically, an MLP head
with L2-regularized weights is trained per task, and per-extractor heads
can be combined by hard voting, soft probability averaging, or by training
one head on the full concatenated feature space.
"""

from .classifier import HeadClassifier, HeadModel, TrainConfig, train_head
from .ensembles import (
    BlockEnsembleClassifier,
    MethodSpec,
    evaluate_method,
    method_predictions,
)
from .episodes import AccuracySummary, Episode, EpisodeSpec, sample_episode, summarize
from .feature_store import (
    EmbeddingSet,
    ExtractorLayout,
    FeatureLibrary,
    assemble_library,
    gather_rows,
    load_embedding_set,
    load_library,
    load_manifest,
    write_embedding_set,
    write_manifest,
)

__all__ = [
    "AccuracySummary",
    "BlockEnsembleClassifier",
    "EmbeddingSet",
    "Episode",
    "EpisodeSpec",
    "ExtractorLayout",
    "FeatureLibrary",
    "HeadClassifier",
    "HeadModel",
    "MethodSpec",
    "TrainConfig",
    "assemble_library",
    "evaluate_method",
    "gather_rows",
    "load_embedding_set",
    "load_library",
    "load_manifest",
    "method_predictions",
    "sample_episode",
    "summarize",
    "train_head",
    "write_embedding_set",
    "write_manifest",
]

__version__ = "0.1.0"
