"""Per-class centroids and adaptive decision radii.

Each known class gets a centroid (the mean of its projected training
vectors) and a radius fitted by walking r upward from 0 until the stopping
criterion F(r) drops to zero. F balances two pressures: points of other
classes should fall outside the ball, points of the class inside, with the
class-imbalance weight beta scaling the in-class term.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError


@dataclass(frozen=True)
class ClassGeometry:
    """Centroid, example count, and (once fitted) decision radius of one class."""

    label: str
    centroid: np.ndarray
    count: int
    radius: float | None = None

    def __post_init__(self):
        c = np.asarray(self.centroid, dtype=np.float64)
        if c.ndim != 1 or not np.isfinite(c).all():
            raise DataError(f"class {self.label!r}: centroid must be a finite 1-D vector")
        c.setflags(write=False)
        object.__setattr__(self, "centroid", c)
        if self.count < 1:
            raise DataError(f"class {self.label!r}: count must be >= 1")
        if self.radius is not None and not (0.0 <= self.radius <= 2.0):
            raise DataError(f"class {self.label!r}: radius {self.radius} outside [0, 2]")


@dataclass(frozen=True)
class BoundaryParams:
    """Radius search schedule: grid step, iteration cap, optional fixed beta."""

    step: float = 0.001
    max_iter: int = 2000
    beta_override: float | None = None

    def __post_init__(self):
        if self.step <= 0:
            raise DataError("step must be positive")
        if self.max_iter < 1:
            raise DataError("max_iter must be >= 1")
        if self.beta_override is not None and self.beta_override <= 0:
            raise DataError("beta_override must be positive")


@dataclass(frozen=True)
class RadiusFit:
    """Outcome of one radius search."""

    radius: float
    converged: bool
    iterations: int


def compute_centroids(
    projected: np.ndarray, class_indices: np.ndarray, labels: Sequence[str]
) -> list[ClassGeometry]:
    """Mean of each class's projected vectors, radius left unset.

    `projected` is (n, d); `class_indices` assigns each row to a position in
    `labels`. Every class must have at least one example.
    """
    X = np.asarray(projected, dtype=np.float64)
    y = np.asarray(class_indices)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError("projected must be (n, d) with one class index per row")
    out: list[ClassGeometry] = []
    for i, label in enumerate(labels):
        mask = y == i
        n = int(mask.sum())
        if n == 0:
            raise DataError(f"class {label!r} has no examples; cannot place a centroid")
        out.append(ClassGeometry(label=label, centroid=X[mask].mean(axis=0), count=n))
    return out


def norm_euclid(x: np.ndarray, y: np.ndarray) -> float:
    """Euclidean distance between the L2-normalized inputs; range [0, 2]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"shape mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise NumericError("zero-norm vector has no direction; projection is degenerate")
    return float(np.linalg.norm(x / nx - y / ny))


def _norm_rows(X: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise NumericError(f"zero-norm {what} row; projection is degenerate")
    return X / norms[:, None]


def distances_to_centroid(projected: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    """norm_euclid of every row of `projected` against one centroid."""
    X = np.asarray(projected, dtype=np.float64)
    U = _norm_rows(X, "projected")
    c = np.asarray(centroid, dtype=np.float64)
    nc = np.linalg.norm(c)
    if nc == 0.0:
        raise NumericError("zero-norm centroid; projection is degenerate")
    return np.linalg.norm(U - c / nc, axis=1)


def beta(n_i: int, n_rest: int) -> float:
    """Imbalance weight for one class: other-class count over own count."""
    if n_i < 1 or n_rest < 1:
        raise DataError(f"counts must be >= 1, got n_i={n_i}, n_rest={n_rest}")
    return n_rest / n_i


def criterion_F(
    dists_ind: Sequence[float] | np.ndarray,
    dists_ood: Sequence[float] | np.ndarray,
    r: float,
    beta: float,
) -> float:
    """Stopping criterion at radius r.

    Signed mean excess distance of the other-class points plus beta times the
    signed mean excess of the in-class points. Positive F means the ball is
    still too small; the radius search stops at the first F <= 0.
    """
    ind = np.asarray(dists_ind, dtype=np.float64)
    ood = np.asarray(dists_ood, dtype=np.float64)
    if ind.size == 0 or ood.size == 0:
        raise DataError("criterion needs at least one in-class and one other-class distance")
    if r < 0:
        raise DataError(f"radius must be >= 0, got {r}")
    return float(np.mean(ood - r) + beta * np.mean(ind - r))


def closed_form_radius(mean_ood_dist: float, mean_ind_dist: float, beta: float) -> float:
    """Exact zero of the criterion, which is linear in r with slope -(1 + beta)."""
    if beta <= 0:
        raise DataError(f"beta must be positive, got {beta}")
    return (mean_ood_dist + beta * mean_ind_dist) / (1.0 + beta)


def search_radius(
    dists_ind: Sequence[float] | np.ndarray,
    dists_ood: Sequence[float] | np.ndarray,
    beta: float,
    params: BoundaryParams = BoundaryParams(),
) -> RadiusFit:
    """Walk r up a fixed grid from 0 until the criterion is no longer positive.

    Grid points are multiples of params.step capped at 2.0 (the distance
    ceiling on normalized vectors), so the default schedule of 2000 steps of
    0.001 covers the whole feasible range. If the cap on iterations is hit
    first, the last examined r is returned with converged=False.
    """
    ind = np.asarray(dists_ind, dtype=np.float64)
    ood = np.asarray(dists_ood, dtype=np.float64)
    r = 0.0
    for t in range(params.max_iter + 1):
        r = min(t * params.step, 2.0)
        if criterion_F(ind, ood, r, beta) <= 0.0:
            return RadiusFit(radius=r, converged=True, iterations=t)
    return RadiusFit(radius=r, converged=False, iterations=params.max_iter)


def fit_radius(
    class_index: int,
    geometry: Sequence[ClassGeometry],
    projected: np.ndarray,
    class_indices: np.ndarray,
    params: BoundaryParams = BoundaryParams(),
) -> RadiusFit:
    """Fit the decision radius of one class against all other classes' points.

    In-class distances come from the class's own projected training vectors,
    other-class distances from everything else; beta defaults to the count
    ratio unless params.beta_override pins it.
    """
    if len(geometry) < 2:
        raise DataError("radius fitting needs at least 2 classes")
    if not (0 <= class_index < len(geometry)):
        raise DataError(f"class_index {class_index} out of range")
    X = np.asarray(projected, dtype=np.float64)
    y = np.asarray(class_indices)
    geo = geometry[class_index]
    dists = distances_to_centroid(X, geo.centroid)
    mask = y == class_index
    ind = dists[mask]
    ood = dists[~mask]
    if ind.size == 0 or ood.size == 0:
        raise DataError(
            f"class {geo.label!r}: needs in-class and other-class examples to fit a radius"
        )
    b = params.beta_override if params.beta_override is not None else beta(
        int(ind.size), int(ood.size)
    )
    return search_radius(ind, ood, b, params)
