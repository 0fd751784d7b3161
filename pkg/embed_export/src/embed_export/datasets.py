"""Corpus acquisition and parsing.

Both corpora are fetched from their upstream repositories into a local cache
on first use and parsed from their native formats:

- clinc150: one JSON file with six split keys (`train`, `val`, `test` and the
  three `oos_*` splits), each a list of `[utterance, intent]` pairs.
- banking77: two CSV files (`train.csv`, `test.csv`) with a `text,category`
  header.

Loaders return a `TextCorpus` whose rows are `(label, text)` pairs. All
out-of-scope utterances are relabeled `__ood__` and placed in the test split,
so the train split is always free of the reserved label and the emitted files
can be consumed directly by downstream training code.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from ._util import atomic_write_bytes
from .errors import ExportError
from .registry import DatasetEntry, register_dataset

logger = logging.getLogger(__name__)

OOD_LABEL = "__ood__"

_CLINC_URL = "https://raw.githubusercontent.com/clinc/oos-eval/master/data/data_full.json"
_BANKING_URL_BASE = (
    "https://raw.githubusercontent.com/PolyAI-LDN/task-specific-datasets/master/banking_data"
)


@dataclass(frozen=True)
class TextCorpus:
    """A labeled text corpus ready for encoding.

    `train` never contains the reserved label; `test` may, for corpora with
    native out-of-scope utterances.
    """

    name: str
    train: tuple[tuple[str, str], ...]
    test: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for label, _ in self.train:
            if label == OOD_LABEL:
                raise ExportError(f"reserved label {OOD_LABEL!r} in train split")


def default_cache_dir() -> Path:
    env = os.environ.get("EMBED_EXPORT_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "embed-export"


def _fetch(url: str, dest: Path) -> None:
    logger.info("downloading %s", url)
    try:
        with urllib.request.urlopen(url, timeout=120) as resp:
            payload = resp.read()
    except (urllib.error.URLError, OSError) as exc:
        raise ExportError(
            f"could not download {url}: {exc}; place the file at {dest} to run offline"
        ) from None
    atomic_write_bytes(dest, payload)


def _ensure_file(cache_dir: str | Path | None, dataset: str, filename: str, url: str) -> Path:
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    dest = root / dataset / filename
    if not dest.is_file():
        dest.parent.mkdir(parents=True, exist_ok=True)
        _fetch(url, dest)
    return dest


def _string_pairs(rows, where: str) -> list[tuple[str, str]]:
    """Native clinc rows are [utterance, intent]; flip to (label, text)."""
    out: list[tuple[str, str]] = []
    if not isinstance(rows, list):
        raise ExportError(f"{where}: expected a list of [text, label] pairs")
    for i, row in enumerate(rows):
        if not (
            isinstance(row, list)
            and len(row) == 2
            and all(isinstance(part, str) for part in row)
        ):
            raise ExportError(f"{where}[{i}]: expected a [text, label] string pair")
        text, label = row
        out.append((label, text))
    return out


def load_clinc150(cache_dir: str | Path | None = None) -> TextCorpus:
    """150 intent classes plus native out-of-scope utterances.

    Split mapping: `train` + `val` become the train side; `test` plus every
    out-of-scope split becomes the test side, with the out-of-scope rows
    relabeled `__ood__`.
    """
    path = _ensure_file(cache_dir, "clinc150", "data_full.json", _CLINC_URL)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ExportError(f"{path}: not a readable JSON file: {exc}") from None
    if not isinstance(raw, dict):
        raise ExportError(f"{path}: expected a JSON object of splits")
    needed = ("train", "val", "test", "oos_train", "oos_val", "oos_test")
    missing = [key for key in needed if key not in raw]
    if missing:
        raise ExportError(f"{path}: missing splits: {', '.join(missing)}")

    splits = {key: _string_pairs(raw[key], f"{path}:{key}") for key in needed}
    train = splits["train"] + splits["val"]
    ood = splits["oos_train"] + splits["oos_val"] + splits["oos_test"]
    test = splits["test"] + [(OOD_LABEL, text) for _, text in ood]
    return TextCorpus(name="clinc150", train=tuple(train), test=tuple(test))


def _read_banking_csv(path: Path) -> list[tuple[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
                "text",
                "category",
            ]:
                raise ExportError(
                    f"{path}: expected header 'text,category', got {reader.fieldnames}"
                )
            rows: list[tuple[str, str]] = []
            for lineno, row in enumerate(reader, start=2):
                text = (row.get("text") or "").strip()
                label = (row.get("category") or "").strip()
                if not text or not label:
                    raise ExportError(f"{path}:{lineno}: empty text or category")
                rows.append((label, text))
    except OSError as exc:
        raise ExportError(f"{path}: {exc}") from None
    return rows


def load_banking77(cache_dir: str | Path | None = None) -> TextCorpus:
    """77 banking intents, no native out-of-scope split."""
    train_path = _ensure_file(
        cache_dir, "banking77", "train.csv", f"{_BANKING_URL_BASE}/train.csv"
    )
    test_path = _ensure_file(cache_dir, "banking77", "test.csv", f"{_BANKING_URL_BASE}/test.csv")
    return TextCorpus(
        name="banking77",
        train=tuple(_read_banking_csv(train_path)),
        test=tuple(_read_banking_csv(test_path)),
    )


register_dataset(DatasetEntry(name="clinc150", load=load_clinc150, source=_CLINC_URL))
register_dataset(DatasetEntry(name="banking77", load=load_banking77, source=_BANKING_URL_BASE))
