import math

import numpy as np
import pytest

from activity_space.core.grid import BoundingBox, make_grid
from activity_space.kde import (
    EmptyPointSetError,
    Kernel,
    SpatialBuckets,
    evaluate_kde,
    evaluate_kde_many,
    kde_at_samples,
    kde_field,
    quartic_kernel,
)


@pytest.mark.parametrize(
    "u,expected",
    [(0.0, 3 / math.pi), (1.0, 0.0), (-1.0, 0.0), (1.5, 0.0), (0.5, 0.537148)],
)
def test_quartic_kernel(u, expected):
    assert quartic_kernel(u) == pytest.approx(expected, abs=1e-6)


def test_kernel_registry():
    kernel = Kernel.by_name("quartic")()
    np.testing.assert_allclose(kernel(np.array([0.0, 0.5])), [3 / math.pi, 0.537148], atol=1e-6)


def test_evaluate_kde():
    assert evaluate_kde([[0.0, 0.0]], (0.0, 0.0), 1.0) == pytest.approx(3 / math.pi)
    # far points contribute nothing
    assert evaluate_kde([[1.0, 0.0], [0.0, -2.0]], (0.0, 0.0), 1.0) == 0.0
    # distances 0 and 0.5: (3 / pi) (1 + 0.75^2) / 2
    value = evaluate_kde([[0.0, 0.0], [0.5, 0.0]], (0.0, 0.0), 1.0)
    assert value == pytest.approx(3 / math.pi * (1 + 0.5625) / 2)
    assert value == pytest.approx(0.746039, abs=1e-6)


def test_evaluate_kde_errors():
    with pytest.raises(EmptyPointSetError):
        evaluate_kde(np.empty((0, 2)), (0.0, 0.0), 1.0)
    with pytest.raises(ValueError, match="bandwidth"):
        evaluate_kde([[0.0, 0.0]], (0.0, 0.0), 0.0)
    with pytest.raises(ValueError, match="finite"):
        evaluate_kde([[np.nan, 0.0]], (0.0, 0.0), 1.0)
    with pytest.raises(ValueError, match="shape"):
        evaluate_kde([[0.0, 0.0, 0.0]], (0.0, 0.0), 1.0)


def test_evaluate_kde_translation():
    rng = np.random.default_rng(3)
    points = rng.uniform(0, 5, size=(40, 2))
    shift = np.array([1234.5, -987.25])
    a = evaluate_kde(points, (2.5, 2.5), 1.2)
    b = evaluate_kde(points + shift, (2.5 + shift[0], 2.5 + shift[1]), 1.2)
    assert a == pytest.approx(b, rel=1e-9)


def test_spatial_buckets(random_points):
    buckets = SpatialBuckets.build(random_points, 1.5)
    indices = np.sort(np.concatenate(list(buckets.buckets.values())))
    np.testing.assert_array_equal(indices, np.arange(len(random_points)))
    for members in buckets.buckets.values():
        assert (np.diff(members) > 0).all()
    # the 3x3 neighbourhood of a query holds every point closer than h
    query = np.array([[5.0, 5.0]])
    key = buckets.keys(query)[0]
    candidates = set(buckets.neighbourhood((int(key[0]), int(key[1]))).tolist())
    close = np.flatnonzero(np.hypot(*(random_points - query).T) < 1.5)
    assert set(close.tolist()) <= candidates


def test_kde_field_single_point(unit_grid):
    field = kde_field([[0.5, 0.5]], unit_grid, 0.9)
    assert field[(0, 0)] == pytest.approx(3 / math.pi / 0.81)
    assert np.count_nonzero(field.values) == 1


def test_kde_field_matches_brute_force(random_points):
    grid = make_grid(BoundingBox(0.0, 0.0, 10.0, 10.0), 1.0)
    field = kde_field(random_points, grid, 1.5)
    expected = [evaluate_kde(random_points, tuple(c), 1.5) for c in grid.centers()]
    np.testing.assert_array_equal(field.values.reshape(-1), expected)
    assert field.is_non_negative()


def test_evaluate_kde_many_matches_brute_force():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(300, 2))
    queries = rng.normal(size=(80, 2))
    expected = [evaluate_kde(points, tuple(q), 0.4) for q in queries]
    np.testing.assert_array_equal(evaluate_kde_many(points, queries, 0.4), expected)


def test_kde_at_samples():
    assert kde_at_samples([[1.0, 1.0]], 1.0).tolist() == [pytest.approx(3 / math.pi)]
    values = kde_at_samples([[1.0, 1.0], [1.0, 1.0], [1.5, 1.0]], 1.0)
    assert values[0] == values[1]

    rng = np.random.default_rng(11)
    points = rng.uniform(0, 3, size=(100, 2))
    points[10] = points[20]
    expected = [evaluate_kde(points, tuple(p), 0.7) for p in points]
    np.testing.assert_array_equal(kde_at_samples(points, 0.7), expected)
    np.testing.assert_array_equal(kde_at_samples(points, 0.7, unique=False), expected)


def test_kde_field_discrete_mass():
    rng = np.random.default_rng(5)
    points = rng.uniform(0, 4, size=(200, 2))
    h = 1.0
    grid = make_grid(BoundingBox(0, 0, 4, 4).pad(h), 0.25, align=True)
    field = kde_field(points, grid, h)
    assert 0.9 <= field.values.sum() * grid.cell_area <= 1.1

