import numpy as np
import pandas as pd
import pytest

from activity_space.config import AnalysisConfig, ConfigError
from activity_space.experiments import (
    BENCHMARK_GAMMAS,
    bandwidth_sweep,
    check_bandwidths,
    consistency_bandwidth,
    error_bounds,
    kde_divergence,
    level_set_recovery,
    ranking_consistency,
    recovery_levels,
    run_benchmark,
    run_replicate,
    spawn_seeds,
    summary_curve_band,
)
from activity_space.metrics.symmetric_difference import RESULT_COLUMNS
from activity_space.mixture import sample


@pytest.fixture
def small_config():
    return AnalysisConfig(bandwidth=0.5, cell_size=0.1, step=0.1)


def test_spawn_seeds():
    seeds = spawn_seeds(0, 5)
    assert seeds == spawn_seeds(0, 5)
    assert len(set(seeds)) == 5
    assert spawn_seeds(1, 5) != seeds
    assert spawn_seeds(0, 3) == seeds[:3]
    with pytest.raises(ValueError):
        spawn_seeds(0, 0)


def test_consistency_bandwidth():
    assert consistency_bandwidth(1) == 1.0
    assert consistency_bandwidth(128) == pytest.approx(0.5)


def test_benchmark_gammas():
    assert len(BENCHMARK_GAMMAS) == 19
    assert BENCHMARK_GAMMAS[0] == 0.05
    assert BENCHMARK_GAMMAS[-1] == 0.95


def test_run_replicate(model, small_config):
    replicate = run_replicate(model, 500, seed=3, config=small_config)
    assert replicate.n == 500
    assert replicate.seed == 3
    assert replicate.bandwidth == 0.5
    assert set(replicate.level_sets) == {"density_ranking", "kde"}
    assert list(replicate.level_sets["kde"]) == [0.6, 0.9]
    np.testing.assert_array_equal(replicate.points, sample(model, 500, 3))


def test_run_benchmark(model, small_config):
    table = run_benchmark(model, 400, reps=2, seed=0, config=small_config, gammas=[0.6, 0.9])
    assert table.columns.tolist() == RESULT_COLUMNS
    assert len(table) == 2 * 2 * 2
    assert (table["reps"] == 2).all()
    assert table["mean"].between(0, 1).all()

    again, replicates = run_benchmark(
        model, 400, reps=2, seed=0, config=small_config, gammas=[0.6, 0.9], keep_replicates=True
    )
    pd.testing.assert_frame_equal(again, table)
    assert len(replicates) == 2

    with pytest.raises(ConfigError, match="repetitions"):
        run_benchmark(model, 400, reps=0, seed=0, config=small_config)
    with pytest.raises(ValueError, match="gamma"):
        run_benchmark(model, 400, reps=1, seed=0, config=small_config, gammas=[1.5])


def test_run_benchmark_in_processes(model, small_config):
    kwargs = dict(reps=3, seed=5, config=small_config, gammas=[0.6])
    serial = run_benchmark(model, 300, **kwargs)
    parallel = run_benchmark(model, 300, n_jobs=2, **kwargs)
    pd.testing.assert_frame_equal(serial, parallel)


def test_summary_curve_band(model, small_config):
    _, replicates = run_benchmark(
        model, 300, reps=3, seed=1, config=small_config, gammas=[0.6], keep_replicates=True
    )
    levels = small_config.levels()
    for kind in ["mass-volume", "betti", "persistence"]:
        band = summary_curve_band(replicates, kind, levels)
        assert band.columns.tolist() == ["level", "mean", "min", "max"]
        assert len(band) == len(levels)
        assert (band["min"] <= band["mean"] + 1e-12).all()
        assert (band["mean"] <= band["max"] + 1e-12).all()
    with pytest.raises(ValueError, match="at least one replicate"):
        summary_curve_band([], "betti", levels)


@pytest.mark.parametrize(
    "bandwidths,message",
    [([0.5], "at least two"), ([0.5, -1.0], "positive"), ([0.5, 0.5], "distinct")],
)
def test_check_bandwidths(bandwidths, message):
    with pytest.raises(ConfigError, match=message):
        check_bandwidths(bandwidths)


def test_bandwidth_sweep(model):
    points = sample(model, 600, seed=2)
    config = AnalysisConfig(bandwidth=1.0, cell_size=0.1, step=0.05)
    fields, summary = bandwidth_sweep(points, [0.8, 0.4], config)
    assert list(fields) == [0.8, 0.4]
    assert fields[0.8].grid.cell_size == 0.1
    assert summary.columns.tolist() == ["bandwidth", "betti_max"]
    assert summary["bandwidth"].tolist() == [0.8, 0.4]
    assert (summary["betti_max"] >= 1).all()


def test_ranking_consistency(model):
    frame, medians = ranking_consistency(model, sizes=(200, 400), seeds=(0, 1), n_eval=100)
    assert frame.columns.tolist() == ["n", "seed", "bandwidth", "error"]
    assert len(frame) == 4
    assert frame["error"].between(0, 1).all()
    assert medians.index.tolist() == [200, 400]


def test_level_set_recovery(model):
    frame, medians = level_set_recovery(model, sizes=(500, 1_000), seeds=(0,), cell_size=0.1)
    assert frame.columns.tolist() == ["n", "seed", "bandwidth", "anchors_error", "roads_error"]
    expected = [consistency_bandwidth(500), consistency_bandwidth(1_000)]
    assert frame["bandwidth"].tolist() == expected
    assert frame[["anchors_error", "roads_error"]].stack().between(0, 1).all()
    assert medians.columns.tolist() == ["anchors_error", "roads_error"]


def test_level_set_recovery_fixed_bandwidth(model):
    frame, _ = level_set_recovery(model, sizes=(500, 1_000), seeds=(0,), h=0.5, cell_size=0.1)
    assert frame["bandwidth"].tolist() == [0.5, 0.5]


def test_recovery_levels(model):
    anchors_gamma, roads_gamma = recovery_levels(model)
    assert anchors_gamma == 0.6
    # 0.6 + 0.3 is not 0.9 in floating point
    assert roads_gamma == 0.9
    assert 1.0 - roads_gamma == 1.0 - 0.9


def test_kde_divergence(model):
    points = sample(model, 20_000, seed=spawn_seeds(0, 1)[0])
    frame = kde_divergence(points)
    assert frame["bandwidth"].tolist() == [0.4, 0.2, 0.1, 0.05]
    assert frame["density"].is_monotonic_increasing
    assert frame["density"].diff().iloc[1:].gt(0).all()


def test_error_bounds():
    table = pd.DataFrame(
        {
            "gamma": [0.6, 0.9],
            "estimator": ["density_ranking", "density_ranking"],
            "target": ["anchors", "anchors+roads"],
            "mean": [0.08, 0.15],
            "stderr": [0.002, None],
            "reps": [100, 1],
        }
    )
    bounds = error_bounds(table)
    assert bounds["bound"].tolist() == pytest.approx([0.09, 0.15])
    assert "bound" not in table.columns
    assert error_bounds(table, k=0)["bound"].tolist() == [0.08, 0.15]
    with pytest.raises(ValueError, match="non-negative"):
        error_bounds(table, k=-1)
