"""Synthetic feature libraries for desk-scale runs and tests.

Each member places its class means on distinct coordinate axes, scaled so
every pair of means is exactly ``separation`` apart, and adds unit-variance
Gaussian noise per row.  Separation is therefore expressed directly in
noise standard deviations.
"""

from __future__ import annotations

import numpy as np

from .feature_store import EmbeddingSet, assemble_library
from .rng import SplitMix64, mix


def _standard_normal(stream: SplitMix64, shape) -> np.ndarray:
    # Box-Muller over the deterministic uniform stream.
    n = int(np.prod(shape)) if shape else 1
    pairs = (n + 1) // 2
    u1 = np.clip(stream.fill_uniform(pairs), 1e-300, None)
    u2 = stream.fill_uniform(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return out[:n].reshape(shape)


def make_gaussian_library(
    classes: int,
    rows_per_class: int,
    member_dims,
    separation: float = 10.0,
    seed: int = 0,
    dataset_name: str = "synthetic",
    signal_fraction: float = 1.0,
):
    """Library of Gaussian clusters with exact pairwise mean distance.

    ``signal_fraction`` confines the class means to the first fraction of
    each member's features (the rest carry pure noise); 0 removes the class
    signal entirely.  Axis choice and sign are randomized per member from
    the seed, so members are informative but not identical.
    """
    member_dims = list(member_dims)
    labels = np.repeat(np.arange(classes), rows_per_class)
    scale = separation / np.sqrt(2.0)
    sets = []
    for m, dim in enumerate(member_dims):
        stream = SplitMix64(mix(seed, m))
        signal_dims = int(round(signal_fraction * dim))
        means = np.zeros((classes, dim))
        if signal_dims > 0:
            if signal_dims < classes:
                raise ValueError(
                    f"member {m}: {signal_dims} signal dims cannot host "
                    f"{classes} orthogonal class means"
                )
            axes = stream.shuffle_prefix(list(range(signal_dims)), classes)
            for c, axis in enumerate(axes):
                sign = 1.0 if stream.below(2) == 0 else -1.0
                means[c, axis] = sign * scale
        noise = _standard_normal(stream, (classes * rows_per_class, dim))
        data = (means[labels] + noise).astype(np.float32)
        sets.append(
            EmbeddingSet(extractor_name=f"member{m}", data=data, row_labels=labels)
        )
    return assemble_library(sets, dataset_name=dataset_name)
