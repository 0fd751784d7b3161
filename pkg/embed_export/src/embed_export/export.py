"""The export pipeline: load a corpus, encode every utterance once, write
train.jsonl / test.jsonl plus a manifest.

Output rows are JSON objects with `label`, `vector`, and `text` keys, one per
line, in corpus order. The manifest records the dataset, the encoder and its
pinned version, row counts, the vector dimension, and the sorted train label
set, which is everything `verify_manifest` needs to recheck an export.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._util import atomic_write_text
from .datasets import OOD_LABEL, TextCorpus
from .errors import ExportError
from .registry import get_dataset, get_encoder

logger = logging.getLogger(__name__)

TRAIN_FILE = "train.jsonl"
TEST_FILE = "test.jsonl"
MANIFEST_FILE = "manifest.json"


@dataclass(frozen=True)
class ExportSpec:
    dataset: str
    encoder: str
    out_dir: str | Path
    batch_size: int = 64
    cache_dir: str | Path | None = None

    def __post_init__(self):
        get_dataset(self.dataset)
        get_encoder(self.encoder)
        if self.batch_size < 1:
            raise ExportError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ExportResult:
    train_path: Path
    test_path: Path
    manifest_path: Path
    manifest: dict


def _encode_batched(encoder, texts: Sequence[str], batch_size: int) -> np.ndarray:
    parts: list[np.ndarray] = []
    for start in range(0, len(texts), batch_size):
        chunk = list(texts[start : start + batch_size])
        arr = np.asarray(encoder.encode(chunk))
        if arr.ndim != 2 or arr.shape[0] != len(chunk):
            raise ExportError(
                f"encoder {encoder.name!r} returned shape {arr.shape} "
                f"for a batch of {len(chunk)} texts"
            )
        if not np.all(np.isfinite(arr)):
            raise ExportError(f"encoder {encoder.name!r} produced non-finite values")
        parts.append(arr)
    try:
        return np.concatenate(parts)
    except ValueError as exc:  # ragged widths across batches
        raise ExportError(f"encoder {encoder.name!r} changed width mid-run: {exc}") from None


def _write_split(path: Path, rows: Sequence[tuple[str, str]], vectors: np.ndarray) -> None:
    lines = []
    for (label, text), vec in zip(rows, vectors, strict=True):
        row = {"label": label, "vector": [float(v) for v in vec], "text": text}
        lines.append(json.dumps(row, ensure_ascii=False))
    atomic_write_text(path, "\n".join(lines) + "\n")


def export(spec: ExportSpec) -> ExportResult:
    """Encode the corpus named by `spec` and write the three output files.

    Deterministic for a fixed encoder version: rows keep corpus order and
    each utterance is encoded exactly once.
    """
    corpus: TextCorpus = get_dataset(spec.dataset).load(cache_dir=spec.cache_dir)
    entry = get_encoder(spec.encoder)
    for split_name, rows in (("train", corpus.train), ("test", corpus.test)):
        if not rows:
            raise ExportError(f"{spec.dataset}: empty {split_name} split")

    encoder = entry.make()
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dims: set[int] = set()
    counts: dict[str, int] = {}
    paths = {"train": out / TRAIN_FILE, "test": out / TEST_FILE}
    for split_name, rows in (("train", corpus.train), ("test", corpus.test)):
        texts = [text for _, text in rows]
        vectors = _encode_batched(encoder, texts, spec.batch_size)
        dims.add(int(vectors.shape[1]))
        _write_split(paths[split_name], rows, vectors)
        counts[split_name] = len(rows)
        logger.info("encoded %d %s rows", len(rows), split_name)
    counts["test_ood"] = sum(1 for label, _ in corpus.test if label == OOD_LABEL)

    if len(dims) != 1:
        raise ExportError(f"encoder {encoder.name!r} produced mixed widths: {sorted(dims)}")
    dim = dims.pop()
    if dim != entry.dim:
        logger.warning(
            "encoder %s advertises dim %d but produced %d (checkpoint drift?)",
            entry.name,
            entry.dim,
            dim,
        )

    manifest = {
        "dataset": spec.dataset,
        "encoder": entry.name,
        "version": encoder.version,
        "counts": counts,
        "dim": dim,
        "labels": sorted({label for label, _ in corpus.train}),
    }
    manifest_path = out / MANIFEST_FILE
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExportResult(
        train_path=paths["train"],
        test_path=paths["test"],
        manifest_path=manifest_path,
        manifest=manifest,
    )
