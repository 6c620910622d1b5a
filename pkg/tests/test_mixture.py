import math

import numpy as np
import pytest

from activity_space.core.grid import BoundingBox, CellSet, make_grid
from activity_space.mixture import (
    Atom,
    MixtureModel,
    ModelDocumentError,
    Rect,
    Segment,
    Target,
    atom_cells,
    component_measures,
    dimension,
    hausdorff_density,
    load_model,
    sample,
    symmetric_difference_error,
    true_alpha,
    true_alpha_many,
    true_measure,
)


@pytest.fixture
def support_grid():
    return make_grid(BoundingBox(-1.0, -1.0, 3.0, 3.0), 0.25)


def test_paper_model(model):
    assert model.pi == (0.6, 0.3, 0.1)
    assert [(a.x, a.y, a.mass) for a in model.atoms] == [
        (0.0, 0.0, 0.5),
        (0.0, 2.0, 0.3),
        (2.0, 0.0, 0.2),
    ]
    home_office = model.segments[2]
    assert home_office.linear_density == pytest.approx(0.25)
    assert model.segments[1].length == pytest.approx(2 * math.sqrt(2))
    assert model.rects[1].area_density == pytest.approx(0.46875)
    assert load_model(None) == model


def test_model_validation():
    atom = Atom(0.0, 0.0, 1.0)
    with pytest.raises(ValueError, match="sum to 1"):
        MixtureModel(pi=(0.5, 0.4, 0.0), atoms=(atom,))
    with pytest.raises(ValueError, match="no parts"):
        MixtureModel(pi=(0.5, 0.5, 0.0), atoms=(atom,))
    with pytest.raises(ValueError, match="masses of component 'atoms'"):
        MixtureModel(pi=(1.0, 0.0, 0.0), atoms=(Atom(0.0, 0.0, 0.5),))
    with pytest.raises(ValueError, match="overlap"):
        MixtureModel(
            pi=(0.0, 0.0, 1.0),
            rects=(Rect(0, 0, 2, 2, 0.5), Rect(1, 1, 3, 3, 0.5)),
        )
    with pytest.raises(ValueError, match="no length"):
        Segment(1.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="no area"):
        Rect(0.0, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="mass must be positive"):
        Atom(0.0, 0.0, -1.0)


def test_model_json(model, tmp_path):
    path = tmp_path / "model.json"
    model.save(path)
    assert MixtureModel.load(path) == model
    assert load_model(path) == model

    with pytest.raises(ModelDocumentError, match="not valid JSON"):
        MixtureModel.from_json("{")
    with pytest.raises(ModelDocumentError, match="missing the key"):
        MixtureModel.from_json('{"atoms": []}')
    with pytest.raises(ModelDocumentError, match="JSON object"):
        MixtureModel.from_json("[1, 2]")
    with pytest.raises(ModelDocumentError, match="invalid model document"):
        MixtureModel.from_json('{"pi": [1, 0, 0], "atoms": [{"x": 0, "y": 0, "mass": 0.5}]}')


def test_sample_single_atom():
    model = MixtureModel(pi=(1.0, 0.0, 0.0), atoms=(Atom(0.0, 0.0, 1.0),))
    assert (sample(model, 100, seed=0) == 0.0).all()


def test_sample(model):
    points = sample(model, 500, seed=3)
    assert points.shape == (500, 2)
    np.testing.assert_array_equal(points, sample(model, 500, seed=3))
    assert not np.array_equal(points, sample(model, 500, seed=4))
    with pytest.raises(ValueError, match="at least 1"):
        sample(model, 0, seed=0)
    with pytest.raises(ValueError, match="non-negative"):
        sample(model, 10, seed=-1)


def test_sample_anchor_fraction(model, model_points):
    anchors = np.asarray([(a.x, a.y) for a in model.atoms])
    on_anchor = (model_points[:, None, :] == anchors[None, :, :]).all(axis=2).any(axis=1)
    assert abs(on_anchor.mean() - 0.6) <= 3 * math.sqrt(0.6 * 0.4 / len(model_points))


def test_true_measure(model, support_grid):
    home = make_grid(BoundingBox(-0.5, -0.5, 0.5, 0.5), 0.25)
    assert true_measure(model, CellSet.full(home)) == pytest.approx(0.43)
    assert component_measures(model, CellSet.full(home)) == pytest.approx((0.5, 0.2, 0.7))
    assert true_measure(model, CellSet.empty(support_grid)) == 0.0
    assert true_measure(model, CellSet.full(support_grid)) == pytest.approx(1.0)


def test_true_measure_additive(model, support_grid):
    rng = np.random.default_rng(0)
    for _ in range(1_000):
        cells = CellSet(support_grid, rng.uniform(size=support_grid.shape) < 0.5)
        rest = CellSet.full(support_grid) - cells
        assert true_measure(model, cells) + true_measure(model, rest) == pytest.approx(1.0)


def test_true_measure_monte_carlo(model, support_grid):
    points = sample(model, 50_000, seed=21)
    rng = np.random.default_rng(1)
    left = np.zeros(support_grid.shape, dtype=bool)
    left[:, : support_grid.ncols // 2] = True
    masks = [left, ~left, rng.uniform(size=support_grid.shape) < 0.3]
    for mask in masks:
        cells = CellSet(support_grid, mask)
        p = true_measure(model, cells)
        empirical = cells.contains_points(points).mean()
        assert abs(empirical - p) <= 4 * math.sqrt(p * (1 - p) / len(points))


def test_symmetric_difference_error(model, support_grid):
    empty = CellSet.empty(support_grid)
    full = CellSet.full(support_grid)
    assert symmetric_difference_error(model, empty, Target.ANCHORS) == pytest.approx(0.6)
    assert symmetric_difference_error(model, empty, "anchors+roads") == pytest.approx(0.9)
    assert symmetric_difference_error(model, full, Target.ANCHORS) == pytest.approx(0.4)
    assert symmetric_difference_error(model, full, Target.ANCHORS_AND_ROADS) == pytest.approx(
        0.1
    )

    fine = make_grid(BoundingBox(-1.0, -1.0, 3.0, 3.0), 0.01, align=True)
    anchors = atom_cells(model, fine)
    assert anchors.count() == 3
    assert symmetric_difference_error(model, anchors, Target.ANCHORS) < 0.01
    with pytest.raises(ValueError):
        symmetric_difference_error(model, anchors, "roads")


@pytest.mark.parametrize(
    "point,omega",
    [
        ((0.0, 0.0), 0),
        ((2.0, 0.0), 0),
        ((1.0, 1.0), 1),
        ((0.0, 1.2), 1),
        ((0.3, 0.3), 2),
        ((5.0, 5.0), 2),
    ],
)
def test_dimension(model, point, omega):
    assert dimension(model, point) == omega


@pytest.mark.parametrize(
    "point,alpha",
    [
        ((0.0, 0.0), 1.0),
        ((0.0, 2.0), 0.7),
        ((2.0, 0.0), 0.52),
        ((1.5, 0.5), 0.16),
        ((0.7, 0.0), 0.1 + 0.3 * 0.5),
        ((2.2, 0.3), 0.03),
        ((0.3, -0.2), 0.1),
        ((5.0, 5.0), 0.0),
    ],
)
def test_true_alpha(model, point, alpha):
    assert true_alpha(model, point) == pytest.approx(alpha)


def test_true_alpha_constant_along_segments(model):
    t = np.linspace(0.05, 0.95, 7)
    for segment in model.segments:
        values = true_alpha_many(model, segment.point_at(t))
        assert np.ptp(values) == 0.0
    assert ((true_alpha_many(model, sample(model, 1_000, seed=8)) >= 0)).all()


def test_hausdorff_density(model):
    assert hausdorff_density(model, (0.0, 0.0)) == pytest.approx(0.3)
    assert hausdorff_density(model, (0.0, 1.0)) == pytest.approx(0.3 * 0.25)
    assert hausdorff_density(model, (0.3, 0.3)) == pytest.approx(0.1 * 0.7)
