import numpy as np
import pytest

from oodbound.boundary import (
    BoundaryParams,
    ClassGeometry,
    beta,
    closed_form_radius,
    compute_centroids,
    criterion_F,
    distances_to_centroid,
    fit_radius,
    norm_euclid,
    search_radius,
)
from oodbound.errors import DataError, NumericError

from oracles import mean_reversed, radius_root, sphere_point


def test_centroid_single_point_per_class():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    geos = compute_centroids(X, np.array([0, 1]), ["a", "b"])
    assert np.array_equal(geos[0].centroid, X[0])
    assert np.array_equal(geos[1].centroid, X[1])
    assert geos[0].count == 1


def test_centroid_two_point_mean():
    X = np.array([[1.0, 0.0], [3.0, 2.0], [9.0, 9.0]])
    geos = compute_centroids(X, np.array([0, 0, 1]), ["a", "b"])
    assert np.array_equal(geos[0].centroid, np.array([2.0, 1.0]))


def test_centroid_matches_reversed_summation_oracle():
    rng = np.random.default_rng(17)
    X = rng.standard_normal((50, 7))
    geos = compute_centroids(X, np.zeros(50, dtype=int), ["only"])
    oracle = mean_reversed(list(X))
    assert np.max(np.abs(geos[0].centroid - oracle)) < 1e-12


def test_centroid_empty_class_errors():
    X = np.ones((3, 2))
    with pytest.raises(DataError, match="no examples"):
        compute_centroids(X, np.zeros(3, dtype=int), ["a", "b"])


def test_norm_euclid_identity_and_antipode():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(6)
    assert norm_euclid(x, x) == 0.0
    assert norm_euclid(x, -x) == pytest.approx(2.0, abs=1e-12)


def test_norm_euclid_scale_invariance():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(4)
    y = rng.standard_normal(4)
    assert norm_euclid(x, y) == pytest.approx(norm_euclid(3.7 * x, 0.002 * y), abs=1e-12)


def test_norm_euclid_is_a_metric_on_the_sphere():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x, y, z = rng.standard_normal((3, 5))
        dxy = norm_euclid(x, y)
        assert dxy == pytest.approx(norm_euclid(y, x), abs=1e-15)
        assert 0.0 <= dxy <= 2.0
        assert dxy <= norm_euclid(x, z) + norm_euclid(z, y) + 1e-12


def test_norm_euclid_zero_norm_rejected():
    with pytest.raises(NumericError, match="zero-norm"):
        norm_euclid(np.zeros(3), np.ones(3))


def test_beta_values():
    assert beta(100, 400) == 4.0
    assert beta(7, 7) == 1.0
    # balanced 150-class split: every class sees 149 times its own count
    n = 3
    assert beta(n, n * 149) == 149.0
    with pytest.raises(DataError):
        beta(0, 5)


def test_criterion_reduces_to_means_at_zero():
    rng = np.random.default_rng(3)
    ind = rng.uniform(0, 2, size=11)
    ood = rng.uniform(0, 2, size=23)
    b = 2.5
    f0 = criterion_F(ind, ood, 0.0, b)
    assert f0 == pytest.approx(np.mean(ood) + b * np.mean(ind), abs=1e-12)


def test_criterion_linear_in_r_for_constant_distances():
    ind = [0.2] * 6
    ood = [1.0] * 9
    for r in (0.0, 0.1, 0.36, 0.5):
        assert criterion_F(ind, ood, r, 4.0) == pytest.approx(1.8 - 5.0 * r, abs=1e-12)


def test_criterion_input_validation():
    with pytest.raises(DataError):
        criterion_F([], [1.0], 0.0, 1.0)
    with pytest.raises(DataError):
        criterion_F([1.0], [], 0.0, 1.0)
    with pytest.raises(DataError):
        criterion_F([1.0], [1.0], -0.1, 1.0)


def test_closed_form_radius_values():
    assert closed_form_radius(0.7, 0.7, 3.0) == pytest.approx(0.7, abs=1e-15)
    assert closed_form_radius(1.0, 0.2, 4.0) == pytest.approx(0.36, abs=1e-15)
    assert closed_form_radius(1.0, 0.2, 1e6) == pytest.approx(0.2, abs=1e-5)
    with pytest.raises(DataError):
        closed_form_radius(1.0, 0.2, 0.0)


def test_closed_form_decreases_with_beta_when_ind_closer():
    # d r*/d beta has the sign of (mean_ind - mean_ood)
    A, B = 1.0, 0.2
    grid = [0.1, 0.5, 1.0, 5.0, 50.0, 200.0]
    values = [closed_form_radius(A, B, b) for b in grid]
    assert all(a > b for a, b in zip(values, values[1:]))
    rising = [closed_form_radius(0.2, 1.0, b) for b in grid]
    assert all(a < b for a, b in zip(rising, rising[1:]))


def test_search_radius_half_way_fixture():
    # in-class all at 0, others at 1, beta 1: the root is exactly 0.5
    fit = search_radius([0.0] * 5, [1.0] * 5, 1.0, BoundaryParams())
    assert fit.converged
    assert 0.5 <= fit.radius <= 0.5 + 0.001


def test_search_radius_spot_value():
    fit = search_radius([0.2] * 10, [1.0] * 10, 4.0, BoundaryParams(step=0.001))
    assert fit.converged
    assert 0.360 <= fit.radius <= 0.361


def test_search_radius_giant_step():
    fit = search_radius([0.2] * 3, [1.0] * 3, 4.0, BoundaryParams(step=2.0, max_iter=5))
    assert fit.converged
    assert fit.radius == 2.0


def test_search_radius_non_convergence_flag():
    fit = search_radius([0.0] * 4, [1.0] * 4, 1.0, BoundaryParams(step=0.001, max_iter=10))
    assert not fit.converged
    assert fit.radius == pytest.approx(0.010)
    assert fit.iterations == 10


def test_search_radius_tracks_oracle_root():
    rng = np.random.default_rng(8)
    for _ in range(25):
        ind = rng.uniform(0.01, 1.9, size=rng.integers(2, 30))
        ood = rng.uniform(0.01, 1.9, size=rng.integers(2, 30))
        b = float(rng.uniform(0.1, 200))
        fit = search_radius(ind, ood, b, BoundaryParams())
        root = radius_root(float(np.mean(ood)), float(np.mean(ind)), b)
        assert fit.converged
        assert abs(fit.radius - root) <= 0.001 + 1e-12


def _geometry_fixture(dists_ind, dists_ood):
    """Points on the unit sphere realizing prescribed distances from e0."""
    e0 = np.array([1.0, 0.0, 0.0])
    e1 = np.array([0.0, 1.0, 0.0])
    pts = [sphere_point(e0, e1, d) for d in dists_ind]
    pts += [sphere_point(e0, e1, d) for d in dists_ood]
    X = np.stack(pts)
    y = np.array([0] * len(dists_ind) + [1] * len(dists_ood))
    geos = [
        ClassGeometry(label="a", centroid=e0, count=len(dists_ind)),
        ClassGeometry(label="b", centroid=e1, count=len(dists_ood)),
    ]
    return geos, X, y


def test_fit_radius_uses_class_counts_for_beta():
    geos, X, y = _geometry_fixture([0.2] * 4, [1.0] * 12)
    fit = fit_radius(0, geos, X, y, BoundaryParams())
    # beta = 12/4 = 3, so the root is (1.0 + 3 * 0.2) / 4 = 0.4
    assert 0.4 <= fit.radius <= 0.401


def test_fit_radius_beta_override():
    geos, X, y = _geometry_fixture([0.2] * 4, [1.0] * 12)
    fit = fit_radius(0, geos, X, y, BoundaryParams(beta_override=4.0))
    assert 0.36 <= fit.radius <= 0.361


def test_fit_radius_matches_search_on_realized_distances():
    rng = np.random.default_rng(21)
    ind = list(rng.uniform(0.05, 1.9, size=9))
    ood = list(rng.uniform(0.05, 1.9, size=14))
    geos, X, y = _geometry_fixture(ind, ood)
    fitted = fit_radius(0, geos, X, y, BoundaryParams())
    dists = distances_to_centroid(X, geos[0].centroid)
    direct = search_radius(dists[y == 0], dists[y == 1], 14 / 9, BoundaryParams())
    assert fitted.radius == direct.radius


def test_fit_radius_validation():
    geos, X, y = _geometry_fixture([0.2], [1.0])
    with pytest.raises(DataError, match="2 classes"):
        fit_radius(0, geos[:1], X, y)
    with pytest.raises(DataError, match="out of range"):
        fit_radius(5, geos, X, y)


def test_class_geometry_validation():
    with pytest.raises(DataError, match="radius"):
        ClassGeometry(label="a", centroid=np.ones(2), count=1, radius=2.5)
    with pytest.raises(DataError, match="count"):
        ClassGeometry(label="a", centroid=np.ones(2), count=0)
    with pytest.raises(DataError, match="finite"):
        ClassGeometry(label="a", centroid=np.array([np.nan, 1.0]), count=1)


def test_boundary_params_validation():
    with pytest.raises(DataError):
        BoundaryParams(step=0.0)
    with pytest.raises(DataError):
        BoundaryParams(max_iter=0)
    with pytest.raises(DataError):
        BoundaryParams(beta_override=-1.0)
