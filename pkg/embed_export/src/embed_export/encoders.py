"""Frozen sentence encoders.

Three pretrained checkpoints are registered (two Universal Sentence Encoder
variants served from TF Hub and one Sentence-BERT model), each behind a lazy
import so the package works without the heavyweight backends installed.
`debug-hash` is a dependency-free hashing encoder for dry runs and tests: it
is deterministic across processes and platforms, so exports made with it are
byte-reproducible.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ExportError
from .registry import EncoderEntry, register_encoder


class Encoder(Protocol):
    name: str
    version: str
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        """Return a (len(texts), dim) float array, one row per input."""
        ...


_TOKEN = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class HashingEncoder:
    """Signed unigram feature hashing onto the unit sphere.

    Each token lands in `blake2b(token) >> 1 mod dim` with a sign from the
    low hash bit; the row is then L2-normalized. No vocabulary, no weights,
    no randomness.
    """

    dim: int = 64
    name: str = "debug-hash"
    version: str = "blake2-unigram/1"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for r, text in enumerate(texts):
            tokens = _TOKEN.findall(text.lower()) or [""]
            for tok in tokens:
                h = int.from_bytes(
                    hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest(), "big"
                )
                out[r, (h >> 1) % self.dim] += 1.0 if h & 1 == 0 else -1.0
            norm = float(np.linalg.norm(out[r]))
            if norm == 0.0:  # opposite-signed collisions can cancel exactly
                out[r, 0] = 1.0
                norm = 1.0
            out[r] /= norm
        return out


class _TfHubEncoder:
    """Universal Sentence Encoder family, loaded from TF Hub."""

    def __init__(self, name: str, version: str, dim: int, url: str):
        self.name = name
        self.version = version
        self.dim = dim
        try:
            import tensorflow_hub as hub  # deferred: multi-GB dependency
        except ImportError as exc:
            raise ExportError(
                f"encoder {name!r} needs tensorflow_hub "
                f"(pip install 'embed-export[encoders]'): {exc}"
            ) from None
        self._model = hub.load(url)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._model(list(texts)), dtype=np.float32)


class _SbertEncoder:
    def __init__(self, name: str, version: str, dim: int, model_id: str):
        self.name = name
        self.version = version
        self.dim = dim
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ExportError(
                f"encoder {name!r} needs sentence-transformers "
                f"(pip install 'embed-export[encoders]'): {exc}"
            ) from None
        self._model = SentenceTransformer(model_id)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vecs = self._model.encode(
            list(texts), show_progress_bar=False, convert_to_numpy=True
        )
        return np.asarray(vecs, dtype=np.float32)


register_encoder(
    EncoderEntry(
        name="use-dan",
        version="tfhub:universal-sentence-encoder/4",
        dim=512,
        make=lambda: _TfHubEncoder(
            "use-dan",
            "tfhub:universal-sentence-encoder/4",
            512,
            "https://tfhub.dev/google/universal-sentence-encoder/4",
        ),
        requires="tensorflow_hub",
    )
)
register_encoder(
    EncoderEntry(
        name="use-tran",
        version="tfhub:universal-sentence-encoder-large/5",
        dim=512,
        make=lambda: _TfHubEncoder(
            "use-tran",
            "tfhub:universal-sentence-encoder-large/5",
            512,
            "https://tfhub.dev/google/universal-sentence-encoder-large/5",
        ),
        requires="tensorflow_hub",
    )
)
register_encoder(
    EncoderEntry(
        name="sbert",
        version="sbert:all-mpnet-base-v2",
        dim=768,
        make=lambda: _SbertEncoder(
            "sbert", "sbert:all-mpnet-base-v2", 768, "all-mpnet-base-v2"
        ),
        requires="sentence_transformers",
    )
)
register_encoder(
    EncoderEntry(
        name="debug-hash",
        version="blake2-unigram/1",
        dim=64,
        make=HashingEncoder,
    )
)
