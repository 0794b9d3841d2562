import numpy as np
import pytest

from fsb.feature_store import EmbeddingSet, assemble_library, write_embedding_set, write_manifest
from fsb.synthetic import make_gaussian_library


@pytest.fixture(scope="session")
def separable_lib():
    """8 classes x 25 rows, three 64-dim members, 10-sigma separation."""
    lib, layout = make_gaussian_library(
        classes=8, rows_per_class=25, member_dims=[64, 64, 64],
        separation=10.0, seed=7,
    )
    return lib, layout


@pytest.fixture(scope="session")
def noise_lib():
    lib, layout = make_gaussian_library(
        classes=8, rows_per_class=25, member_dims=[64, 64, 64],
        separation=10.0, seed=7, signal_fraction=0.0, dataset_name="noise",
    )
    return lib, layout


def identical_member_library(copies: int, seed: int = 3):
    """Library whose members are byte-identical copies of one embedding set."""
    base, _ = make_gaussian_library(
        classes=6, rows_per_class=20, member_dims=[32], separation=10.0, seed=seed,
    )
    member = base.members[0]
    sets = [
        EmbeddingSet(
            extractor_name=f"copy{i}",
            data=member.data.copy(),
            row_labels=member.row_labels.copy(),
        )
        for i in range(copies)
    ]
    return assemble_library(sets, dataset_name="copies")


def write_library_to_disk(tmp_path, lib, dataset=None):
    """Materialize a library as FSEB files + manifest; returns manifest path."""
    extractors = []
    for member in lib.members:
        filename = f"{member.extractor_name}.fseb"
        write_embedding_set(tmp_path / filename, member.data)
        extractors.append(
            {"name": member.extractor_name, "file": filename, "dim": member.feature_dim}
        )
    classes = [{"id": int(c), "name": f"class{c}"} for c in lib.class_ids]
    manifest_path = tmp_path / "manifest.json"
    write_manifest(
        manifest_path,
        dataset or lib.dataset_name,
        lib.row_labels.tolist(),
        classes,
        extractors,
    )
    return manifest_path
