"""The deployable artifact: projection + class geometry + decision rule.

A query is projected, compared to every class centroid by normalized
Euclidean distance, and assigned to the nearest class if it falls inside
that class's fitted radius, otherwise rejected as "__ood__".
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metric_learning
from ._util import atomic_write_text, canonical_json, sha256_hex
from .boundary import (
    BoundaryParams,
    ClassGeometry,
    compute_centroids,
    fit_radius,
)
from .data import Dataset, OOD_LABEL
from .errors import DataError, NumericError
from .metric_learning import Projection, TrainConfig

logger = logging.getLogger(__name__)

MODEL_FORMAT = "oodbound/1"


@dataclass(frozen=True)
class Prediction:
    label: str
    nearest_label: str
    distance: float
    margin: float


@dataclass(frozen=True)
class DetectorModel:
    projection: Projection
    geometry: tuple[ClassGeometry, ...]
    labels: tuple[str, ...]
    metadata: dict

    def __post_init__(self):
        if len(self.geometry) != len(self.labels) or len(self.labels) < 2:
            raise DataError("model needs one geometry per label and >= 2 labels")
        for geo, label in zip(self.geometry, self.labels):
            if geo.label != label:
                raise DataError(f"geometry order mismatch: {geo.label!r} vs {label!r}")
            if geo.radius is None:
                raise DataError(f"class {label!r} has no fitted radius")

    @cached_property
    def _centroid_units(self) -> np.ndarray:
        C = np.stack([g.centroid for g in self.geometry])
        norms = np.linalg.norm(C, axis=1)
        if np.any(norms == 0.0):
            raise NumericError("zero-norm centroid; projection is degenerate")
        return C / norms[:, None]

    @cached_property
    def _radii(self) -> np.ndarray:
        return np.array([g.radius for g in self.geometry], dtype=np.float64)


def fit(
    train: Dataset,
    train_config: TrainConfig = TrainConfig(),
    boundary_params: BoundaryParams = BoundaryParams(),
) -> DetectorModel:
    """Learn the projection, place centroids, and fit every class radius."""
    if OOD_LABEL in {it.label for it in train.items}:
        raise DataError(f"training data may not contain the reserved label {OOD_LABEL!r}")
    vocab = train.label_vocab
    if len(vocab) < 2:
        raise DataError(f"fitting needs >= 2 classes, got {len(vocab)}")

    proj, report = metric_learning.train(train, train_config)
    projected = metric_learning.apply(proj, train.matrix())
    y = train.label_indices()
    geos = compute_centroids(projected, y, vocab)

    fitted: list[ClassGeometry] = []
    convergence: list[bool] = []
    for i, geo in enumerate(geos):
        rf = fit_radius(i, geos, projected, y, boundary_params)
        if not rf.converged:
            logger.warning(
                "class %r: radius search hit max_iter=%d, keeping r=%.6f",
                geo.label,
                boundary_params.max_iter,
                rf.radius,
            )
        convergence.append(rf.converged)
        fitted.append(
            ClassGeometry(label=geo.label, centroid=geo.centroid, count=geo.count, radius=rf.radius)
        )

    metadata = {
        "train_config": {
            "loss": train_config.loss,
            "learning_rate": train_config.learning_rate,
            "epochs": train_config.epochs,
            "batch_size": train_config.batch_size,
            "seed": train_config.seed,
            "lmcl_scale": train_config.lmcl_scale,
            "lmcl_margin": train_config.lmcl_margin,
            "triplet_margin": train_config.triplet_margin,
            "dim_out": train_config.dim_out,
        },
        "boundary_params": {
            "step": boundary_params.step,
            "max_iter": boundary_params.max_iter,
            "beta_override": boundary_params.beta_override,
        },
        "dataset": {
            "items": len(train),
            "dim": train.dim,
            "classes": len(vocab),
            "fingerprint": _dataset_fingerprint(train),
        },
        "dim_in": proj.dim_in,
        "dim_out": proj.dim_out,
        "final_loss": report.final_loss,
        "radius_converged": convergence,
    }
    return DetectorModel(
        projection=proj, geometry=tuple(fitted), labels=vocab, metadata=metadata
    )


def _dataset_fingerprint(dataset: Dataset) -> str:
    payload = dataset.matrix().tobytes() + "\x00".join(
        it.label for it in dataset.items
    ).encode("utf-8")
    return sha256_hex(payload)


def _predict_rows(model: DetectorModel, X: np.ndarray) -> list[Prediction]:
    if X.shape[1] != model.projection.dim_in:
        raise DataError(
            f"input dimension {X.shape[1]} != model dimension {model.projection.dim_in}"
        )
    # einsum keeps each row's reduction order independent of the batch size,
    # so one-row and many-row calls agree bitwise (BLAS matmul does not)
    Z = np.einsum("ni,oi->no", X, model.projection.weights)
    zn = np.linalg.norm(Z, axis=1)
    bad = np.nonzero(zn == 0.0)[0]
    if bad.size:
        raise NumericError(
            f"query at index {int(bad[0])} projects to the zero vector; cannot classify"
        )
    U = Z / zn[:, None]
    # (n, k) unit-sphere distances via the Gram form |u - c| = sqrt(2 - 2 u.c);
    # clip absorbs round-off just above cos = 1
    G = np.einsum("nd,kd->nk", U, model._centroid_units)
    D = np.sqrt(np.clip(2.0 - 2.0 * G, 0.0, None))
    best = np.argmin(D, axis=1)  # ties resolve to the lowest class index
    out: list[Prediction] = []
    for row, i in enumerate(best):
        dist = float(D[row, i])
        radius = float(model._radii[i])
        margin = radius - dist
        nearest = model.labels[i]
        label = nearest if dist <= radius else OOD_LABEL
        out.append(Prediction(label=label, nearest_label=nearest, distance=dist, margin=margin))
    return out


def predict(model: DetectorModel, x: np.ndarray) -> Prediction:
    """Classify one vector as a known class or "__ood__"."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("predict takes a single 1-D vector; use predict_batch for stacks")
    return _predict_rows(model, x[None, :])[0]


def predict_batch(model: DetectorModel, xs: np.ndarray | Sequence[np.ndarray]) -> list[Prediction]:
    """Classify a stack of vectors; output order matches input order."""
    if isinstance(xs, np.ndarray) and xs.ndim == 2:
        X = np.asarray(xs, dtype=np.float64)
    else:
        rows = [np.asarray(v, dtype=np.float64) for v in xs]
        if not rows:
            return []
        X = np.stack(rows)
    if X.shape[0] == 0:
        return []
    return _predict_rows(model, X)


def save_model(model: DetectorModel, path: str | Path) -> None:
    """Write the model as a single checksummed JSON document."""
    payload = {
        "version": MODEL_FORMAT,
        "labels": list(model.labels),
        "weights": model.projection.weights.tolist(),
        "centroids": [g.centroid.tolist() for g in model.geometry],
        "radii": [g.radius for g in model.geometry],
        "counts": [g.count for g in model.geometry],
        "metadata": model.metadata,
    }
    payload["checksum"] = sha256_hex(canonical_json(payload).encode("utf-8"))
    atomic_write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> DetectorModel:
    """Read a model file back; verifies version and content checksum."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such model file: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: corrupt model file: {exc}") from None
    if not isinstance(payload, dict):
        raise DataError(f"{path}: corrupt model file: not a JSON object")
    version = payload.get("version")
    if version != MODEL_FORMAT:
        raise DataError(f"{path}: unsupported model version {version!r}; expected {MODEL_FORMAT!r}")
    required = {"labels", "weights", "centroids", "radii", "counts", "metadata", "checksum"}
    missing = required - payload.keys()
    if missing:
        raise DataError(f"{path}: corrupt model file: missing keys {sorted(missing)}")

    stated = payload["checksum"]
    body = {k: v for k, v in payload.items() if k != "checksum"}
    actual = sha256_hex(canonical_json(body).encode("utf-8"))
    if stated != actual:
        raise DataError(f"{path}: checksum mismatch; file was modified or truncated")

    try:
        weights = np.asarray(payload["weights"], dtype=np.float64)
        if weights.ndim != 2:
            raise DataError("weights must be a matrix")
        proj = Projection(weights=weights, dim_in=weights.shape[1], dim_out=weights.shape[0])
        labels = tuple(str(lab) for lab in payload["labels"])
        geometry = tuple(
            ClassGeometry(
                label=lab,
                centroid=np.asarray(c, dtype=np.float64),
                count=int(n),
                radius=float(r),
            )
            for lab, c, r, n in zip(
                labels, payload["centroids"], payload["radii"], payload["counts"], strict=True
            )
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: corrupt model file: {exc}") from None
    return DetectorModel(
        projection=proj, geometry=geometry, labels=labels, metadata=payload["metadata"]
    )
