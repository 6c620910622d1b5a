"""Seeded simulation experiments on mixture models.

Replicate seeds are derived with :class:`numpy.random.SeedSequence` so that every experiment is
a pure function of its base seed. Replicates may run in a process pool; results are always
consumed in replicate order, so the output does not depend on the number of workers.
"""
import logging
from concurrent import futures
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from activity_space.config import AnalysisConfig, ConfigError
from activity_space.core.grid import ScalarField
from activity_space.core.replicate import Replicate
from activity_space.kde import as_point_array, evaluate_kde, evaluate_kde_many, kde_at_samples
from activity_space.metrics import SymmetricDifferenceMetric
from activity_space.mixture import (
    MixtureModel,
    Target,
    sample,
    symmetric_difference_error,
    true_alpha_many,
)
from activity_space.pipeline import ActivitySpacePipeline
from activity_space.ranking import build_ranking_index, check_gamma
from activity_space.topology import (
    CurveKind,
    betti_curve,
    check_levels,
    mass_volume_curve,
    persistence_curve,
    persistence_pairs,
)

logger = logging.getLogger(__name__)

BENCHMARK_GAMMAS: Tuple[float, ...] = tuple(np.round(np.arange(1, 20) * 0.05, 2).tolist())
BENCHMARK_ESTIMATORS: Tuple[str, ...] = ("density_ranking", "kde")
CONSISTENCY_SIZES: Tuple[int, ...] = (1_000, 4_000, 16_000)
RECOVERY_SIZES: Tuple[int, ...] = (2_000, 8_000)
DIVERGENCE_BANDWIDTHS: Tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
# error bounds lie this many standard errors above the mean error
ERROR_BOUND_STDERRS = 5.0
# sums of mixture weights are rounded to this many digits before use as levels
LEVEL_DIGITS = 12


def spawn_seeds(seed: int, count: int) -> List[int]:
    """``count`` independent integer seeds derived from ``seed``.

    >>> spawn_seeds(0, 2) == spawn_seeds(0, 2)
    True
    """
    if count < 1:
        raise ValueError(f"need at least one seed, got count={count}")
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def consistency_bandwidth(n: int) -> float:
    """Bandwidth ``n ** (-1/7)`` shrinking slowly enough for the ranking to converge."""
    return float(n ** (-1.0 / 7.0))


def run_replicate(
    model: MixtureModel,
    n: int,
    seed: int,
    config: AnalysisConfig,
    gammas: Optional[Sequence[float]] = None,
    estimators: Sequence[str] = BENCHMARK_ESTIMATORS,
) -> Replicate:
    """Draw ``n`` points and compute their density, ranking field and level sets."""
    points = sample(model, n, seed)
    pipeline = ActivitySpacePipeline(config, compute_curves=False)
    result = pipeline(
        points,
        gammas=config.gammas if gammas is None else gammas,
        estimators=list(estimators),
    )
    return result.to_replicate(seed=seed)  # type: ignore


def _replicate_task(
    args: Tuple[MixtureModel, int, int, AnalysisConfig, Sequence[float], Sequence[str]]
) -> Replicate:
    return run_replicate(*args)


def iter_replicates(
    model: MixtureModel,
    n: int,
    seeds: Sequence[int],
    config: AnalysisConfig,
    gammas: Sequence[float],
    estimators: Sequence[str] = BENCHMARK_ESTIMATORS,
    n_jobs: int = 1,
    show_progress_bar: bool = False,
) -> Iterable[Replicate]:
    """Replicates in the order of ``seeds``, computed in ``n_jobs`` processes."""
    tasks = [(model, n, seed, config, tuple(gammas), tuple(estimators)) for seed in seeds]
    progress = dict(total=len(tasks), desc="replicates", disable=not show_progress_bar)
    if n_jobs <= 1:
        for task in tqdm(tasks, **progress):
            yield _replicate_task(task)
        return
    with futures.ProcessPoolExecutor(max_workers=n_jobs) as pool:
        yield from tqdm(pool.map(_replicate_task, tasks), **progress)


def run_benchmark(
    model: MixtureModel,
    n: int,
    reps: int,
    seed: int,
    config: AnalysisConfig,
    gammas: Sequence[float] = BENCHMARK_GAMMAS,
    estimators: Sequence[str] = BENCHMARK_ESTIMATORS,
    targets: Sequence[Union[Target, str]] = (Target.ANCHORS, Target.ANCHORS_AND_ROADS),
    n_jobs: int = 1,
    show_progress_bar: bool = False,
    show_as_markdown: bool = False,
    keep_replicates: bool = False,
) -> Union[pd.DataFrame, Tuple[pd.DataFrame, List[Replicate]]]:
    """Mean symmetric-difference error of every estimator, target and level over ``reps``
    simulated samples.

    Returns the table with the columns ``gamma, estimator, target, mean, stderr, reps``, and
    additionally the replicates when ``keep_replicates`` is set.
    """
    if reps < 1:
        raise ConfigError(f"repetitions must be at least 1, got {reps}")
    gammas = [check_gamma(g) for g in gammas]
    metric = SymmetricDifferenceMetric(
        model, gammas=gammas, targets=targets, show_as_markdown=show_as_markdown
    )
    kept: List[Replicate] = []
    logger.info(f"benchmark: {reps} replicate(s) of n={n} with h={config.bandwidth}")
    for replicate in iter_replicates(
        model,
        n,
        spawn_seeds(seed, reps),
        config,
        gammas,
        estimators=estimators,
        n_jobs=n_jobs,
        show_progress_bar=show_progress_bar,
    ):
        metric(replicate)
        if keep_replicates:
            kept.append(replicate)
    table = metric.compute()
    if keep_replicates:
        return table, kept
    return table



def error_bounds(table: pd.DataFrame, k: float = ERROR_BOUND_STDERRS) -> pd.DataFrame:
    """Upper bound ``mean + k * stderr`` on the error of every row of a benchmark table.

    Computed over many oracle replicates, the bound is the error that a later, smaller
    benchmark of the same setup is expected to stay under.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    bounds = table.copy()
    bounds["bound"] = table["mean"] + k * table["stderr"].fillna(0.0)
    return bounds


def _curve_of(
    replicate: Replicate, kind: CurveKind, levels: np.ndarray, connectivity: int
) -> np.ndarray:
    if kind is CurveKind.MASS_VOLUME:
        return mass_volume_curve(replicate.rank_field, levels).values
    if kind is CurveKind.BETTI:
        return betti_curve(replicate.rank_field, levels, connectivity).values
    pairs = persistence_pairs(replicate.rank_field, connectivity)
    return persistence_curve(pairs, levels).values


def summary_curve_band(
    replicates: Iterable[Replicate],
    kind: Union[CurveKind, str],
    levels: Sequence[float],
    connectivity: int = 8,
) -> pd.DataFrame:
    """Per-level mean, minimum and maximum of one summary curve across replicates."""
    kind = CurveKind(kind)
    levels_array = check_levels(levels)
    curves = np.asarray(
        [_curve_of(replicate, kind, levels_array, connectivity) for replicate in replicates]
    )
    if curves.size == 0:
        raise ValueError("summary band needs at least one replicate")
    return pd.DataFrame(
        {
            "level": levels_array,
            "mean": curves.mean(axis=0),
            "min": curves.min(axis=0),
            "max": curves.max(axis=0),
        }
    )


def check_bandwidths(bandwidths: Iterable[float]) -> List[float]:
    values = [float(h) for h in bandwidths]
    if len(values) < 2:
        raise ConfigError(f"a bandwidth sweep needs at least two bandwidths, got {values}")
    if any(not (np.isfinite(h) and h > 0) for h in values):
        raise ConfigError(f"bandwidths must be positive, got {values}")
    if len(set(values)) != len(values):
        raise ConfigError(f"bandwidths must be distinct, got {values}")
    return values


def bandwidth_sweep(
    points: np.ndarray,
    bandwidths: Iterable[float],
    config: AnalysisConfig,
    show_progress_bar: bool = False,
) -> Tuple[Dict[float, ScalarField], pd.DataFrame]:
    """Ranking field and Betti-curve maximum for each bandwidth.

    The cell size follows each bandwidth unless the configuration fixes it.
    """
    fields: Dict[float, ScalarField] = {}
    rows = []
    for h in tqdm(check_bandwidths(bandwidths), desc="bandwidths", disable=not show_progress_bar):
        pipeline = ActivitySpacePipeline(config.replace(bandwidth=h), estimators=[])
        result = pipeline(points)
        fields[h] = result.rank_field  # type: ignore
        betti_max = int(result.betti.max())  # type: ignore
        logger.info(f"h={h:g}: Betti curve maximum {betti_max}")
        rows.append({"bandwidth": h, "betti_max": betti_max})
    return fields, pd.DataFrame(rows, columns=["bandwidth", "betti_max"])


def ranking_consistency(
    model: MixtureModel,
    sizes: Sequence[int] = CONSISTENCY_SIZES,
    seeds: Sequence[int] = tuple(range(10)),
    n_eval: int = 2_000,
    show_progress_bar: bool = False,
) -> Tuple[pd.DataFrame, pd.Series]:
    """Monte-Carlo mean squared difference between the estimated and the true ranking at fresh
    draws from the model, for every sample size and seed, with its median per sample size."""
    rows = []
    runs = [(n, seed) for n in sizes for seed in seeds]
    for n, seed in tqdm(runs, desc="ranking consistency", disable=not show_progress_bar):
        sample_seed, eval_seed = spawn_seeds(seed, 2)
        h = consistency_bandwidth(n)
        points = sample(model, n, sample_seed)
        index = build_ranking_index(kde_at_samples(points, h))
        fresh = sample(model, n_eval, eval_seed)
        estimated = index.alpha_at(evaluate_kde_many(points, fresh, h))
        error = float(np.mean((estimated - true_alpha_many(model, fresh)) ** 2))
        rows.append({"n": n, "seed": seed, "bandwidth": h, "error": error})
    frame = pd.DataFrame(rows, columns=["n", "seed", "bandwidth", "error"])
    return frame, frame.groupby("n")["error"].median()


def recovery_levels(model: MixtureModel) -> Tuple[float, float]:
    """Levels ``pi0`` and ``pi0 + pi1`` at which the anchors and the roads are recovered.

    >>> from activity_space.mixture import paper_model
    >>> recovery_levels(paper_model())
    (0.6, 0.9)
    """
    anchors_gamma = check_gamma(round(model.pi0, LEVEL_DIGITS))
    roads_gamma = check_gamma(min(round(model.pi0 + model.pi1, LEVEL_DIGITS), 1.0))
    return anchors_gamma, roads_gamma


def level_set_recovery(
    model: MixtureModel,
    sizes: Sequence[int] = RECOVERY_SIZES,
    seeds: Sequence[int] = tuple(range(10)),
    h: Optional[float] = None,
    cell_size: float = 0.05,
    show_progress_bar: bool = False,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Errors of the level set at ``pi0`` against the anchors and of the level set at
    ``pi0 + pi1`` against anchors and roads, per sample size and seed, with per-size medians.

    Without a fixed ``h`` the bandwidth shrinks with the sample size as
    :func:`consistency_bandwidth`; at a fixed bandwidth the smoothing bias does not vanish.
    """
    anchors_gamma, roads_gamma = recovery_levels(model)
    rows = []
    runs = [(n, seed) for n in sizes for seed in seeds]
    for n, seed in tqdm(runs, desc="level set recovery", disable=not show_progress_bar):
        bandwidth = consistency_bandwidth(n) if h is None else h
        replicate = run_replicate(
            model,
            n,
            spawn_seeds(seed, 1)[0],
            AnalysisConfig(bandwidth=bandwidth, cell_size=cell_size),
            gammas=[anchors_gamma, roads_gamma],
            estimators=["density_ranking"],
        )
        anchors = replicate.level_set("density_ranking", anchors_gamma)
        roads = replicate.level_set("density_ranking", roads_gamma)
        rows.append(
            {
                "n": n,
                "seed": seed,
                "bandwidth": bandwidth,
                "anchors_error": symmetric_difference_error(model, anchors, Target.ANCHORS),
                "roads_error": symmetric_difference_error(
                    model, roads, Target.ANCHORS_AND_ROADS
                ),
            }
        )
    frame = pd.DataFrame(
        rows, columns=["n", "seed", "bandwidth", "anchors_error", "roads_error"]
    )
    return frame, frame.groupby("n")[["anchors_error", "roads_error"]].median()


def kde_divergence(
    points: np.ndarray,
    query: Tuple[float, float] = (0.0, 0.0),
    bandwidths: Sequence[float] = DIVERGENCE_BANDWIDTHS,
) -> pd.DataFrame:
    """Density estimate at ``query`` for each bandwidth, in the given order."""
    points = as_point_array(points)
    return pd.DataFrame(
        {
            "bandwidth": [float(h) for h in bandwidths],
            "density": [evaluate_kde(points, query, h) for h in bandwidths],
        }
    )
