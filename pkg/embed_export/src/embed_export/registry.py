"""Name registries for datasets and encoders.

Export specs are validated against these tables, so every legal name is
discoverable (`dataset_names()` / `encoder_names()`) and the CLI can offer
exact choices. The built-in entries are registered by the `datasets` and
`encoders` modules at import time; additional entries can be registered by
downstream code before building an ExportSpec.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import ExportError


@dataclass(frozen=True)
class DatasetEntry:
    """A named corpus: `load(cache_dir=...)` returns a TextCorpus."""

    name: str
    load: Callable[..., object]
    source: str


@dataclass(frozen=True)
class EncoderEntry:
    """A named frozen sentence encoder.

    `make()` builds the encoder instance (importing its backend lazily, so
    the heavyweight dependencies are only needed when actually encoding).
    `dim` and `version` describe the pinned checkpoint; the instance itself
    is the authority once built.
    """

    name: str
    version: str
    dim: int
    make: Callable[[], object]
    requires: str = ""


_DATASETS: dict[str, DatasetEntry] = {}
_ENCODERS: dict[str, EncoderEntry] = {}


def register_dataset(entry: DatasetEntry) -> None:
    if entry.name in _DATASETS:
        raise ExportError(f"dataset {entry.name!r} is already registered")
    _DATASETS[entry.name] = entry


def register_encoder(entry: EncoderEntry) -> None:
    if entry.name in _ENCODERS:
        raise ExportError(f"encoder {entry.name!r} is already registered")
    _ENCODERS[entry.name] = entry


def dataset_names() -> tuple[str, ...]:
    return tuple(sorted(_DATASETS))


def encoder_names() -> tuple[str, ...]:
    return tuple(sorted(_ENCODERS))


def get_dataset(name: str) -> DatasetEntry:
    try:
        return _DATASETS[name]
    except KeyError:
        raise ExportError(
            f"unknown dataset {name!r} (choose from: {', '.join(dataset_names())})"
        ) from None


def get_encoder(name: str) -> EncoderEntry:
    try:
        return _ENCODERS[name]
    except KeyError:
        raise ExportError(
            f"unknown encoder {name!r} (choose from: {', '.join(encoder_names())})"
        ) from None
