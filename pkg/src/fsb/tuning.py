"""Hyperparameter search on a designated validation library.

The search is a plain grid evaluated with the episodic benchmark (1-shot,
shared seed, so grid points see identical episodes) on one validation
dataset that must never appear in the test plan.  One configuration is
kept per way count; 5-shot runs reuse the 1-shot configuration.

``default_profile`` returns the published per-backbone settings so the
benchmark can run without re-searching.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .benchmark import run_benchmark
from .classifier import TrainConfig
from .ensembles import MethodSpec
from .episodes import EpisodeSpec
from .errors import UnknownMethod, ValidationEqualsTest
from .feature_store import FeatureLibrary

# Union of the published per-backbone settings; superset reconstruction,
# overridable by the caller.
DEFAULT_GRID_LEARNING_RATES = (1e-3, 5e-4)
DEFAULT_GRID_EPOCHS = (100, 200, 300)
DEFAULT_GRID_HIDDEN = (0, 512, 1024, 2048, 4096)
DEFAULT_GRID_LAMBDAS = (0.1, 0.2, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class SearchGrid:
    learning_rates: tuple = DEFAULT_GRID_LEARNING_RATES
    epoch_counts: tuple = DEFAULT_GRID_EPOCHS
    hidden_sizes: tuple = DEFAULT_GRID_HIDDEN
    l2_lambdas: tuple = DEFAULT_GRID_LAMBDAS

    def __post_init__(self):
        for name in ("learning_rates", "epoch_counts", "hidden_sizes", "l2_lambdas"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, values)

    def configs(self):
        """All grid points, in deterministic iteration order."""
        for lr, epochs, hidden, lam in itertools.product(
            self.learning_rates, self.epoch_counts, self.hidden_sizes, self.l2_lambdas
        ):
            yield TrainConfig(
                learning_rate=lr, epochs=epochs, hidden_size=hidden, l2_lambda=lam
            )


@dataclass(frozen=True)
class TunedProfile:
    """Chosen configuration per way count; 5-shot reuses the 1-shot one."""

    method: str
    by_ways: dict  # ways -> TrainConfig

    def config_for(self, ways: int) -> TrainConfig:
        if ways not in self.by_ways:
            raise KeyError(f"no tuned configuration for {ways}-way")
        return self.by_ways[ways]

    def to_json(self) -> str:
        doc = {
            "method": self.method,
            "by_ways": {
                str(w): {
                    "learning_rate": c.learning_rate,
                    "epochs": c.epochs,
                    "hidden_size": c.hidden_size,
                    "l2_lambda": c.l2_lambda,
                }
                for w, c in sorted(self.by_ways.items())
            },
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TunedProfile":
        doc = json.loads(text)
        by_ways = {
            int(w): TrainConfig(
                learning_rate=c["learning_rate"],
                epochs=c["epochs"],
                hidden_size=c["hidden_size"],
                l2_lambda=c["l2_lambda"],
            )
            for w, c in doc["by_ways"].items()
        }
        return cls(method=doc["method"], by_ways=by_ways)


def grid_search(
    validation_lib: FeatureLibrary,
    method: MethodSpec,
    ways: int,
    grid: SearchGrid,
    episodes: int,
    seed: int,
    test_dataset_names=(),
    workers: int = 1,
) -> TrainConfig:
    """Best grid point by mean 1-shot accuracy on the validation library.

    Ties break toward fewer epochs, then smaller hidden size, then larger
    penalty, then smaller learning rate.
    """
    if validation_lib.dataset_name in set(test_dataset_names):
        raise ValidationEqualsTest(validation_lib.dataset_name)
    spec = EpisodeSpec(ways=ways, shots=1, episodes=episodes, base_seed=seed)
    best_key, best_config = None, None
    for config in grid.configs():
        summary = run_benchmark(validation_lib, spec, method, config, workers=workers)
        key = (
            -summary.mean,
            config.epochs,
            config.hidden_size,
            -config.l2_lambda,
            config.learning_rate,
        )
        if best_key is None or key < best_key:
            best_key, best_config = key, config
    return best_config


def tune_profile(
    validation_lib: FeatureLibrary,
    method: MethodSpec,
    way_counts,
    grid: SearchGrid,
    episodes: int,
    seed: int,
    test_dataset_names=(),
    workers: int = 1,
) -> TunedProfile:
    by_ways = {
        ways: grid_search(
            validation_lib,
            method,
            ways,
            grid,
            episodes,
            seed,
            test_dataset_names,
            workers,
        )
        for ways in way_counts
    }
    return TunedProfile(method=method.label(), by_ways=by_ways)


# Published per-backbone settings: (epochs, hidden, learning rate, lambda)
# keyed by way count.
_PUBLISHED = {
    "densenet121": {
        5: (200, 1024, 1e-3, 0.2),
        20: (100, 1024, 5e-4, 0.2),
        40: (100, 2048, 5e-4, 0.1),
    },
    "densenet161": {
        5: (100, 1024, 5e-4, 0.2),
        20: (100, 512, 1e-3, 0.1),
        40: (100, 512, 5e-4, 0.1),
    },
    "densenet169": {
        5: (300, 1024, 5e-4, 0.5),
        20: (300, 512, 5e-4, 0.1),
        40: (100, 512, 1e-3, 0.2),
    },
    "densenet201": {
        5: (100, 512, 5e-4, 0.5),
        20: (200, 1024, 5e-4, 0.1),
        40: (100, 1024, 5e-4, 0.1),
    },
    "resnet18": {
        5: (200, 512, 1e-3, 0.2),
        20: (200, 2048, 5e-4, 0.1),
        40: (100, 512, 1e-3, 0.1),
    },
    "resnet34": {
        5: (100, 1024, 5e-4, 0.2),
        20: (100, 1024, 5e-4, 0.1),
        40: (100, 2048, 5e-4, 0.2),
    },
    "resnet50": {
        5: (300, 2048, 5e-4, 0.1),
        20: (100, 1024, 5e-4, 0.1),
        40: (100, 512, 5e-4, 0.1),
    },
    "resnet101": {
        5: (100, 512, 1e-3, 0.1),
        20: (200, 2048, 5e-4, 0.2),
        40: (100, 512, 5e-4, 0.1),
    },
    "resnet152": {
        5: (300, 512, 5e-4, 0.1),
        20: (100, 512, 5e-4, 0.2),
        40: (100, 1024, 5e-4, 0.1),
    },
    "full_library": {
        5: (300, 1024, 5e-4, 0.1),
        20: (100, 512, 5e-4, 0.1),
        40: (100, 1024, 5e-4, 0.1),
    },
    "bit-resnet-101-3": {
        5: (300, 4096, 1e-3, 0.7),
        20: (300, 2048, 5e-4, 0.5),
        40: (300, 512, 5e-4, 0.7),
    },
    "bit-resnet-152-4": {
        5: (300, 2048, 5e-4, 0.7),
        20: (300, 1024, 5e-4, 0.5),
        40: (200, 1024, 5e-4, 0.5),
    },
    "bit-resnet-50-1": {
        5: (200, 2048, 5e-4, 0.5),
        20: (100, 2048, 5e-4, 0.9),
        40: (300, 1024, 5e-4, 0.5),
    },
}


def _canonical(method_id: str) -> str:
    return method_id.strip().lower().replace("_", "-").replace("full-library", "full_library")


def default_profile(method_id: str) -> TunedProfile:
    """Published settings for a backbone (or the full library), verbatim."""
    key = _canonical(method_id)
    if key not in _PUBLISHED:
        raise UnknownMethod(method_id, _PUBLISHED)
    by_ways = {
        ways: TrainConfig(
            learning_rate=lr, epochs=epochs, hidden_size=hidden, l2_lambda=lam
        )
        for ways, (epochs, hidden, lr, lam) in _PUBLISHED[key].items()
    }
    return TunedProfile(method=method_id, by_ways=by_ways)


def known_methods() -> list:
    return sorted(_PUBLISHED)
