import numpy as np
import pytest

from activity_space.config import AnalysisConfig
from activity_space.core.grid import BoundingBox, read_esri_ascii
from activity_space.export import read_curve_csv
from activity_space.kde import EmptyPointSetError, kde_field
from activity_space.pipeline import ActivitySpacePipeline, AnalysisResult
from activity_space.topology import CurveKind, betti_from_pairs


@pytest.fixture
def config():
    return AnalysisConfig(bandwidth=1.5, cell_size=0.5)


@pytest.fixture
def result(config, random_points):
    return ActivitySpacePipeline(config)(random_points)


def test_pipeline(result, config, random_points):
    assert isinstance(result, AnalysisResult)
    grid = result.grid
    assert grid.is_aligned
    assert grid.cell_size == 0.5
    extent = grid.extent
    assert extent.xmin <= random_points[:, 0].min() - 1.5
    assert extent.ymax >= random_points[:, 1].max() + 1.5

    np.testing.assert_array_equal(
        result.density_field.values, kde_field(random_points, grid, 1.5).values
    )
    assert ((result.rank_field.values >= 0) & (result.rank_field.values <= 1)).all()
    assert result.sample_alpha.max() == 1.0
    assert list(result.level_sets) == ["density_ranking"]
    assert list(result.level_sets["density_ranking"]) == [0.6, 0.9]


def test_pipeline_curves(result):
    assert set(result.curves) == set(CurveKind)
    assert len(result.mass_volume) == 99
    assert result.persistence.levels[0] == 0.0
    assert result.persistence.values[0] == len(result.pairs)
    np.testing.assert_array_equal(
        result.betti.values, betti_from_pairs(result.pairs, result.betti.levels)
    )
    # the level set at gamma = 1 - step is the largest one drawn
    assert result.mass_volume.values[-1] <= result.grid.total_area


def test_pipeline_parameters(config, random_points):
    pipeline = ActivitySpacePipeline(config, compute_curves=False, estimators=["kde"])
    result = pipeline(random_points)
    assert result.curves == {}
    assert result.pairs is None
    assert list(result.level_sets) == ["kde"]

    # call parameters override constructor defaults
    result = pipeline(random_points, estimators=["density_ranking", "kde"], gammas=[0.5])
    assert {name: list(sets) for name, sets in result.level_sets.items()} == {
        "density_ranking": [0.5],
        "kde": [0.5],
    }

    with pytest.raises(TypeError, match="unknown pipeline parameters"):
        ActivitySpacePipeline(config, colour="red")
    with pytest.raises(TypeError, match="unknown pipeline parameters"):
        pipeline(random_points, colour="red")


def test_pipeline_bbox(config, random_points):
    bbox = BoundingBox(0.0, 0.0, 5.0, 5.0)
    result = ActivitySpacePipeline(config, compute_curves=False)(random_points, bbox=bbox)
    assert len(result.points) == bbox.contains(random_points).sum()
    assert result.grid.extent.xmin <= -1.5

    clipped = ActivitySpacePipeline(config.replace(bbox=bbox), compute_curves=False)
    assert len(clipped(random_points).points) == len(result.points)

    with pytest.raises(EmptyPointSetError):
        ActivitySpacePipeline(config)(random_points, bbox=BoundingBox(100, 100, 101, 101))


def test_pipeline_named_point_sets(config, random_points):
    pipeline = ActivitySpacePipeline(config, compute_curves=False)
    results = pipeline({"b": random_points[:20], "a": random_points[20:]})
    assert list(results) == ["b", "a"]
    assert results["a"].name == "a"
    assert len(results["a"].points) == 30

    replicate = results["b"].to_replicate(seed=7)
    assert replicate.seed == 7
    assert replicate.n == 20
    assert replicate.level_set("density_ranking", 0.6) == results["b"].level_sets[
        "density_ranking"
    ][0.6]


def test_save(config, random_points, tmp_path):
    pipeline = ActivitySpacePipeline(config, estimators=["density_ranking", "kde"])
    result = pipeline(random_points)
    written = result.save(tmp_path / "run", manifest={"command": "test"})
    names = sorted(path.name for path in written)
    assert names == [
        "betti_curve.csv",
        "density_field.asc",
        "kde_level_set_0.60.asc",
        "kde_level_set_0.90.asc",
        "level_set_0.60.asc",
        "level_set_0.90.asc",
        "manifest.json",
        "mass_volume_curve.csv",
        "persistence_curve.csv",
        "persistence_pairs.csv",
        "rank_field.asc",
        "sample_alpha.csv",
    ]

    out = tmp_path / "run"
    ranks = read_esri_ascii(out / "rank_field.asc")
    np.testing.assert_allclose(ranks.values, result.rank_field.values, rtol=1e-5)
    mask = read_esri_ascii(out / "level_set_0.60.asc")
    np.testing.assert_array_equal(
        mask.values, result.level_sets["density_ranking"][0.6].membership.astype(float)
    )
    betti = read_curve_csv(out / "betti_curve.csv")
    np.testing.assert_allclose(betti["value"], result.betti.values)

    # reruns are byte-identical
    pipeline(random_points).save(tmp_path / "rerun", manifest={"command": "test"})
    for path in written:
        assert (tmp_path / "rerun" / path.name).read_bytes() == path.read_bytes()
