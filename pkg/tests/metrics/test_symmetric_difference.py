import logging
import math

import numpy as np
import pytest

from activity_space.core import BoundingBox, CellSet, Replicate, ScalarField, make_grid
from activity_space.metrics import SymmetricDifferenceMetric
from activity_space.metrics.symmetric_difference import RESULT_COLUMNS


@pytest.fixture
def grid():
    return make_grid(BoundingBox(-1.0, -1.0, 3.0, 3.0), 0.25)


def replicate_with(grid, level_sets):
    zeros = ScalarField(grid, np.zeros(grid.shape))
    return Replicate(
        points=np.zeros((1, 2)),
        grid=grid,
        bandwidth=1.0,
        density_field=zeros,
        rank_field=zeros,
        level_sets=level_sets,
    )


def test_symmetric_difference(model, grid):
    empty, full = CellSet.empty(grid), CellSet.full(grid)
    replicates = [
        replicate_with(grid, {"density_ranking": {0.5: empty}, "kde": {0.5: full}}),
        replicate_with(grid, {"density_ranking": {0.5: full}, "kde": {0.5: full}}),
    ]
    metric = SymmetricDifferenceMetric(model)
    table = metric(replicates)
    assert table.columns.tolist() == RESULT_COLUMNS
    assert len(table) == 4

    rows = table.set_index(["estimator", "target"])
    dr = rows.loc[("density_ranking", "anchors")]
    assert dr["mean"] == pytest.approx(0.5)
    assert dr["stderr"] == pytest.approx(0.1)
    assert dr["reps"] == 2
    kde = rows.loc[("kde", "anchors+roads")]
    assert kde["mean"] == pytest.approx(0.1)
    assert kde["stderr"] == pytest.approx(0.0, abs=1e-12)

    # calling keeps the records until compute() resets them
    assert metric.compute().equals(table)
    assert metric.compute().empty


def test_symmetric_difference_filters(model, grid):
    replicate = replicate_with(
        grid, {"density_ranking": {0.5: CellSet.empty(grid), 0.9: CellSet.full(grid)}}
    )
    metric = SymmetricDifferenceMetric(model, gammas=[0.9], targets=["anchors"])
    table = metric(replicate)
    assert table[["gamma", "target"]].values.tolist() == [[0.9, "anchors"]]
    assert table["mean"].iloc[0] == pytest.approx(0.4)
    assert math.isnan(table["stderr"].iloc[0])
    assert table["reps"].iloc[0] == 1


def test_symmetric_difference_splits(model, grid, caplog):
    replicate = replicate_with(grid, {"density_ranking": {0.6: CellSet.empty(grid)}})
    metric = SymmetricDifferenceMetric(model, show_as_markdown=True)
    with caplog.at_level(logging.INFO):
        tables = metric({"n=2000": [replicate], "n=8000": [replicate, replicate]})
    assert list(tables) == ["n=2000", "n=8000"]
    assert tables["n=8000"]["reps"].tolist() == [2, 2]
    assert "symmetric difference error (split: n=8000)" in caplog.text


def test_symmetric_difference_errors(model, grid):
    with pytest.raises(ValueError, match="targets cannot be empty"):
        SymmetricDifferenceMetric(model, targets=[])
    with pytest.raises(ValueError):
        SymmetricDifferenceMetric(model, targets=["roads"])
    with pytest.raises(ValueError, match="no level sets"):
        SymmetricDifferenceMetric(model)(replicate_with(grid, {}))
