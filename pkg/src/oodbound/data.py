"""Dataset types, file ingestion, known/unknown class splitting, synthetic fixtures.

Embeddings arrive as pre-computed dense vectors (one per utterance) in JSONL
or CSV files. The reserved label "__ood__" marks out-of-domain rows; it never
appears as a trainable class.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from ._util import atomic_write_text

OOD_LABEL = "__ood__"

_FORMATS = ("jsonl", "csv")


def _as_vector(value, *, where: str) -> np.ndarray:
    try:
        vec = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: vector is not numeric: {exc}") from None
    if vec.ndim != 1 or vec.size == 0:
        raise DataError(f"{where}: vector must be a non-empty 1-D sequence")
    if not np.isfinite(vec).all():
        raise DataError(f"{where}: vector has a non-finite component")
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True)
class LabeledEmbedding:
    """One utterance: a dense embedding vector plus its class label."""

    vector: np.ndarray
    label: str
    text: str | None = None

    def __post_init__(self):
        vec = _as_vector(self.vector, where=f"item {self.label!r}")
        object.__setattr__(self, "vector", vec)
        if not isinstance(self.label, str) or not self.label:
            raise DataError("item label must be a non-empty string")


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of labeled embeddings with a shared dimension.

    `labels` holds the distinct non-OOD class names, always derived from the
    items themselves. Instances are immutable and safe to share.
    """

    items: tuple[LabeledEmbedding, ...]
    dim: int
    labels: frozenset[str]

    @classmethod
    def from_items(cls, items: Iterable[LabeledEmbedding]) -> "Dataset":
        items = tuple(items)
        if not items:
            raise DataError("dataset has no items")
        dim = int(items[0].vector.shape[0])
        for i, it in enumerate(items):
            if it.vector.shape[0] != dim:
                raise DataError(
                    f"item {i}: dimension {it.vector.shape[0]} != dataset dimension {dim}"
                )
        labels = frozenset(it.label for it in items if it.label != OOD_LABEL)
        return cls(items=items, dim=dim, labels=labels)

    def __post_init__(self):
        if self.dim <= 0:
            raise DataError("dataset dimension must be positive")
        derived = frozenset(it.label for it in self.items if it.label != OOD_LABEL)
        if derived != self.labels:
            raise DataError("dataset labels must be exactly those present in items")

    def __len__(self) -> int:
        return len(self.items)

    @cached_property
    def label_vocab(self) -> tuple[str, ...]:
        """Sorted non-OOD class names; the canonical class index order."""
        return tuple(sorted(self.labels))

    @cached_property
    def _matrix(self) -> np.ndarray:
        mat = np.stack([it.vector for it in self.items]).astype(np.float64)
        mat.setflags(write=False)
        return mat

    def matrix(self) -> np.ndarray:
        """All vectors stacked into an (n, dim) array, file order preserved."""
        return self._matrix

    def label_indices(self, vocab: Sequence[str] | None = None) -> np.ndarray:
        """Integer class index per item; OOD items get -1."""
        vocab = tuple(vocab) if vocab is not None else self.label_vocab
        index = {lab: i for i, lab in enumerate(vocab)}
        out = np.empty(len(self.items), dtype=np.int64)
        for i, it in enumerate(self.items):
            if it.label == OOD_LABEL:
                out[i] = -1
            else:
                try:
                    out[i] = index[it.label]
                except KeyError:
                    raise DataError(f"item {i}: label {it.label!r} not in vocabulary") from None
        return out

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {lab: 0 for lab in self.label_vocab}
        ood = 0
        for it in self.items:
            if it.label == OOD_LABEL:
                ood += 1
            else:
                counts[it.label] += 1
        if ood:
            counts[OOD_LABEL] = ood
        return counts


@dataclass(frozen=True)
class SplitSpec:
    """Parameters of one known/unknown class split."""

    known_ratio: float
    seed: int
    run_index: int = 0

    def __post_init__(self):
        if not (0.0 < self.known_ratio <= 1.0):
            raise DataError(f"known_ratio must be in (0, 1], got {self.known_ratio}")
        if self.seed < 0 or self.run_index < 0:
            raise DataError("seed and run_index must be non-negative")


@dataclass(frozen=True)
class SplitResult:
    known_labels: frozenset[str]
    train: Dataset
    test: Dataset


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in _FORMATS:
            raise DataError(f"unknown format {fmt!r}; expected one of {_FORMATS}")
        return fmt
    suffix = path.suffix.lower().lstrip(".")
    if suffix in _FORMATS:
        return suffix
    raise DataError(f"cannot infer format from {path.name!r}; pass format explicitly")


def _iter_jsonl_rows(path: Path):
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(row, dict):
                raise DataError(f"{path}:{lineno}: row must be a JSON object")
            yield lineno, row


def _iter_csv_rows(path: Path):
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return
        expect = ["label"] + [f"v{i}" for i in range(len(header) - 1)]
        if header != expect or len(header) < 2:
            raise DataError(f"{path}:1: bad CSV header; expected label,v0,v1,...")
        dim = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise DataError(f"{path}:{lineno}: expected {dim + 1} columns, got {len(row)}")
            try:
                vec = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad float: {exc}") from None
            yield lineno, {"label": row[0], "vector": vec}


def load_dataset(path: str | Path, fmt: str | None = None) -> Dataset:
    """Load a Dataset from a JSONL or CSV embedding file.

    JSONL rows are objects with keys `label`, `vector` and optional `text`.
    CSV files carry a `label,v0,v1,...` header. The file's row order is
    preserved. Raises DataError with a line number on any malformed row.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    fmt = _infer_format(path, fmt)
    rows = _iter_jsonl_rows(path) if fmt == "jsonl" else _iter_csv_rows(path)

    items: list[LabeledEmbedding] = []
    dim: int | None = None
    for lineno, row in rows:
        if "label" not in row or "vector" not in row:
            raise DataError(f"{path}:{lineno}: row needs 'label' and 'vector' keys")
        label = row["label"]
        if not isinstance(label, str) or not label:
            raise DataError(f"{path}:{lineno}: label must be a non-empty string")
        text = row.get("text")
        if text is not None and not isinstance(text, str):
            raise DataError(f"{path}:{lineno}: text must be a string when present")
        try:
            item = LabeledEmbedding(vector=row["vector"], label=label, text=text)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        if dim is None:
            dim = item.vector.shape[0]
        elif item.vector.shape[0] != dim:
            raise DataError(
                f"{path}:{lineno}: dimension {item.vector.shape[0]} != {dim} of earlier rows"
            )
        items.append(item)
    if not items:
        raise DataError(f"{path}: file contains no rows")
    return Dataset.from_items(items)


def load_vectors(path: str | Path, fmt: str | None = None) -> np.ndarray:
    """Load bare vectors for prediction; labels are optional and ignored.

    Accepts the same JSONL/CSV layouts as load_dataset, plus JSONL rows that
    carry only a `vector` key. An empty file yields a (0, 0) array.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    fmt = _infer_format(path, fmt)
    vectors: list[np.ndarray] = []
    if fmt == "jsonl":
        for lineno, row in _iter_jsonl_rows(path):
            if "vector" not in row:
                raise DataError(f"{path}:{lineno}: row needs a 'vector' key")
            vectors.append(_as_vector(row["vector"], where=f"{path}:{lineno}"))
    else:
        for lineno, row in _iter_csv_rows(path):
            vectors.append(_as_vector(row["vector"], where=f"{path}:{lineno}"))
    if not vectors:
        return np.zeros((0, 0), dtype=np.float64)
    dim = vectors[0].shape[0]
    for i, v in enumerate(vectors):
        if v.shape[0] != dim:
            raise DataError(f"{path}: row {i + 1} dimension {v.shape[0]} != {dim}")
    return np.stack(vectors)


def save_dataset(dataset: Dataset, path: str | Path, fmt: str | None = None) -> None:
    """Write a Dataset to JSONL or CSV, matching the load_dataset contract."""
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "jsonl":
        lines = []
        for it in dataset.items:
            row: dict = {"label": it.label, "vector": it.vector.tolist()}
            if it.text is not None:
                row["text"] = it.text
            lines.append(json.dumps(row, ensure_ascii=False))
        atomic_write_text(path, "\n".join(lines) + "\n")
    else:
        header = ",".join(["label"] + [f"v{i}" for i in range(dataset.dim)])
        lines = [header]
        for it in dataset.items:
            lines.append(",".join([it.label] + [repr(float(v)) for v in it.vector]))
        atomic_write_text(path, "\n".join(lines) + "\n")


def _known_class_count(ratio: float, n_labels: int) -> int:
    # ceil with a small snap so float artifacts like 0.1*30 = 3.0000000000000004
    # do not bump the count
    return math.ceil(ratio * n_labels - 1e-9)


def make_split(train: Dataset, test: Dataset, spec: SplitSpec) -> SplitResult:
    """Sample known classes and relabel unknown-class test items as OOD.

    Known classes are drawn uniformly without replacement from the train
    vocabulary with a generator keyed by (seed, run_index), so equal specs
    give identical splits. Unknown-class train items are discarded; every
    test item is kept, with unknown-class labels rewritten to "__ood__".
    """
    if any(it.label == OOD_LABEL for it in train.items):
        raise DataError(f"train dataset contains the reserved label {OOD_LABEL!r}")
    if train.dim != test.dim:
        raise DataError(f"train dim {train.dim} != test dim {test.dim}")
    stray = {it.label for it in test.items if it.label != OOD_LABEL} - train.labels
    if stray:
        raise DataError(f"test labels not in train vocabulary: {sorted(stray)}")
    vocab = train.label_vocab
    if len(vocab) < 2:
        raise DataError("train dataset needs at least 2 classes")

    n_known = _known_class_count(spec.known_ratio, len(vocab))
    if n_known < 2:
        raise DataError(
            f"known_ratio {spec.known_ratio} yields {n_known} known class(es); need at least 2"
        )
    rng = np.random.default_rng([int(spec.seed), int(spec.run_index)])
    chosen = rng.choice(len(vocab), size=n_known, replace=False)
    known = frozenset(vocab[i] for i in chosen)

    train_items = [it for it in train.items if it.label in known]
    if not train_items:
        raise DataError("no train items left after filtering to known classes")
    test_items = [
        it if it.label in known else replace(it, label=OOD_LABEL) for it in test.items
    ]
    return SplitResult(
        known_labels=known,
        train=Dataset.from_items(train_items),
        test=Dataset.from_items(test_items),
    )


def synth_blobs(
    k: int, dim: int, per_class: int, sigma: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Generate separable Gaussian clusters around unit-norm centers.

    Centers are rejection-sampled so every pair is at least 60 degrees apart
    (chord distance >= 1.0 on the unit sphere). Each class contributes
    `per_class` train points and `per_class` test points, all drawn as
    center + sigma * standard normal noise. Deterministic per seed.
    """
    if k < 2:
        raise DataError("need k >= 2 classes")
    if dim < 2:
        raise DataError("need dim >= 2")
    if per_class < 2:
        raise DataError("need per_class >= 2")
    if sigma < 0:
        raise DataError("sigma must be non-negative")

    rng = np.random.default_rng(int(seed))
    max_cos = 0.5  # cos(60 degrees)
    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < k:
        attempts += 1
        if attempts > 10_000:
            raise DataError(
                f"could not place {k} cluster centers in dimension {dim}; dim too small for k"
            )
        c = rng.standard_normal(dim)
        norm = np.linalg.norm(c)
        if norm == 0.0:
            continue
        c = c / norm
        if all(float(np.dot(c, prev)) <= max_cos for prev in centers):
            centers.append(c)

    labels = [f"c{i:03d}" for i in range(k)]

    def draw_split() -> Dataset:
        items = []
        for i in range(k):
            points = centers[i] + sigma * rng.standard_normal((per_class, dim))
            for p in points:
                items.append(LabeledEmbedding(vector=p, label=labels[i]))
        return Dataset.from_items(items)

    return draw_split(), draw_split()
