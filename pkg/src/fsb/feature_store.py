"""On-disk embedding format, manifests, and immutable feature libraries.

Embedding file layout (little-endian, no padding):

    offset 0   magic        4 bytes, b"FSEB"
    offset 4   version      uint32, currently 1
    offset 8   feature_dim  uint32
    offset 12  rows         uint64
    offset 20  payload      rows * feature_dim float32, row-major

Per-row class labels are not stored in the binary payload.  They live in a
sibling JSON manifest shared by every extractor of a dataset, which makes
label agreement across members true by construction:

    {
      "dataset": "aircraft",
      "rows": 10000,
      "labels": [3, 3, 17, ...],
      "classes": [{"id": 3, "name": "707-320"}, ...],
      "extractors": [{"name": "resnet18", "file": "resnet18.fseb", "dim": 512}, ...]
    }

Values are stored as 32-bit floats; everything downstream computes in
64-bit.  No normalization or scaling is applied at load time.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    IndexOutOfRange,
    LabelCountMismatch,
    LabelOrderMismatch,
    NonFiniteValue,
    RowCountMismatch,
    TruncatedFile,
    UnknownMember,
    VersionUnsupported,
)

MAGIC = b"FSEB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


@dataclass(frozen=True)
class EmbeddingSet:
    """One extractor's features for one dataset, one row per image."""

    extractor_name: str
    data: np.ndarray  # rows x feature_dim, float32, read-only
    row_labels: np.ndarray  # rows, int64, read-only

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        labels = np.asarray(self.row_labels, dtype=np.int64)
        if data.ndim != 2:
            raise ValueError(f"data must be 2-D, got shape {data.shape}")
        if labels.shape != (data.shape[0],):
            raise LabelCountMismatch(self.extractor_name, data.shape[0], labels.size)
        bad = ~np.isfinite(data)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise NonFiniteValue(self.extractor_name, int(row), int(col))
        data.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "row_labels", labels)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ExtractorLayout:
    """Column blocks of the concatenated feature space, in member order."""

    blocks: tuple  # of (extractor_name, offset, length)

    def __post_init__(self):
        expected = 0
        for name, offset, length in self.blocks:
            if offset != expected:
                raise ValueError(
                    f"block {name!r} starts at {offset}, expected {expected}"
                )
            expected = offset + length
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def total_dim(self) -> int:
        return sum(length for _, _, length in self.blocks)

    def block(self, name: str) -> tuple:
        for entry in self.blocks:
            if entry[0] == name:
                return entry
        raise UnknownMember(name, [b[0] for b in self.blocks])


@dataclass(frozen=True)
class FeatureLibrary:
    """Ordered collection of embedding sets over the same image rows."""

    dataset_name: str
    members: tuple  # of EmbeddingSet
    class_index: dict = field(repr=False)  # class id -> np.ndarray of row indices

    @property
    def rows(self) -> int:
        return self.members[0].rows

    @property
    def row_labels(self) -> np.ndarray:
        return self.members[0].row_labels

    @property
    def total_dim(self) -> int:
        return sum(m.feature_dim for m in self.members)

    @property
    def member_names(self) -> list:
        return [m.extractor_name for m in self.members]

    @property
    def class_ids(self) -> list:
        return sorted(self.class_index)

    def member(self, name: str) -> EmbeddingSet:
        for m in self.members:
            if m.extractor_name == name:
                return m
        raise UnknownMember(name, self.member_names)


def write_embedding_set(path, data: np.ndarray) -> None:
    """Write a rows x dim float32 matrix in the binary embedding format."""
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2:
        raise ValueError(f"data must be 2-D, got shape {data.shape}")
    rows, dim = data.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, dim, rows))
        f.write(data.tobytes())


def load_embedding_set(path, row_labels, extractor_name: str | None = None) -> EmbeddingSet:
    """Load and validate one embedding file.

    ``row_labels`` comes from the dataset manifest; the binary file holds
    only the header and the float payload.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(path, _HEADER.size, len(raw))
    magic, version, dim, rows = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(path, magic)
    if version != VERSION:
        raise VersionUnsupported(path, version)
    expected = _HEADER.size + 4 * dim * rows
    if len(raw) != expected:
        raise TruncatedFile(path, expected, len(raw))
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, dim)
    labels = np.asarray(row_labels, dtype=np.int64)
    if labels.size != rows:
        raise LabelCountMismatch(path, rows, labels.size)
    name = extractor_name if extractor_name is not None else path.stem
    bad = ~np.isfinite(data)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteValue(str(path), int(row), int(col))
    return EmbeddingSet(extractor_name=name, data=data, row_labels=labels)


def assemble_library(sets, dataset_name: str = "") -> tuple:
    """Build a feature library and its column layout from member sets.

    Members keep the given order, so the layout offsets (and therefore the
    meaning of concatenated feature indices) follow that order exactly.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one embedding set")
    first = sets[0]
    for s in sets[1:]:
        if s.rows != first.rows:
            raise RowCountMismatch(
                first.extractor_name, first.rows, s.extractor_name, s.rows
            )
        if not np.array_equal(s.row_labels, first.row_labels):
            bad = int(np.nonzero(s.row_labels != first.row_labels)[0][0])
            raise LabelOrderMismatch(s.extractor_name, bad)
    class_index = {
        int(c): np.nonzero(first.row_labels == c)[0]
        for c in np.unique(first.row_labels)
    }
    blocks = []
    offset = 0
    for s in sets:
        blocks.append((s.extractor_name, offset, s.feature_dim))
        offset += s.feature_dim
    library = FeatureLibrary(
        dataset_name=dataset_name, members=tuple(sets), class_index=class_index
    )
    return library, ExtractorLayout(tuple(blocks))


def gather_rows(lib: FeatureLibrary, rows, members=None) -> np.ndarray:
    """Concatenated float64 features of the selected members for ``rows``.

    ``members`` is an iterable of member names; None selects every member.
    Duplicate row indices are allowed and preserved.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= lib.rows):
        bad = rows[(rows < 0) | (rows >= lib.rows)][0]
        raise IndexOutOfRange(int(bad), lib.rows)
    if members is None:
        chosen = lib.members
    else:
        chosen = [lib.member(name) for name in members]
    parts = [m.data[rows].astype(np.float64) for m in chosen]
    return np.hstack(parts) if parts else np.empty((rows.size, 0))


@dataclass(frozen=True)
class Manifest:
    dataset: str
    rows: int
    labels: list
    classes: list  # of {"id": int, "name": str}
    extractors: list  # of {"name": str, "file": str, "dim": int}
    path: Path

    @property
    def class_ids(self) -> set:
        return {c["id"] for c in self.classes}


def load_manifest(path) -> Manifest:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    for key in ("dataset", "rows", "labels", "classes", "extractors"):
        if key not in doc:
            raise ValueError(f"{path}: manifest missing key {key!r}")
    if len(doc["labels"]) != doc["rows"]:
        raise LabelCountMismatch(path, doc["rows"], len(doc["labels"]))
    manifest = Manifest(
        dataset=doc["dataset"],
        rows=doc["rows"],
        labels=doc["labels"],
        classes=doc["classes"],
        extractors=doc["extractors"],
        path=path,
    )
    known = manifest.class_ids
    for row, label in enumerate(manifest.labels):
        if label not in known:
            raise ValueError(
                f"{path}: row {row} has label {label} absent from class table"
            )
    return manifest


def write_manifest(path, dataset, labels, classes, extractors) -> None:
    doc = {
        "dataset": dataset,
        "rows": len(labels),
        "labels": [int(x) for x in labels],
        "classes": classes,
        "extractors": extractors,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_library(manifest_path) -> tuple:
    """Load every member listed in a manifest and assemble the library."""
    manifest = load_manifest(manifest_path)
    base = manifest.path.parent
    sets = []
    for entry in manifest.extractors:
        es = load_embedding_set(
            base / entry["file"], manifest.labels, extractor_name=entry["name"]
        )
        if es.feature_dim != entry["dim"]:
            raise ValueError(
                f"{entry['file']}: dim {es.feature_dim} != manifest dim {entry['dim']}"
            )
        sets.append(es)
    return assemble_library(sets, dataset_name=manifest.dataset)
