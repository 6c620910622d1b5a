"""Command line interface: ``activity-space {simulate,analyze,bench,sweep,validate}``.

Exit codes: 0 on success, 2 on usage or configuration errors, 1 on data errors.
"""
import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from activity_space.config import DEFAULT_GAMMAS, AnalysisConfig, ConfigError
from activity_space.core.grid import BoundingBox, write_esri_ascii
from activity_space.core.replicate import Replicate
from activity_space.experiments import (
    BENCHMARK_GAMMAS,
    DIVERGENCE_BANDWIDTHS,
    bandwidth_sweep,
    check_bandwidths,
    kde_divergence,
    level_set_recovery,
    ranking_consistency,
    recovery_levels,
    run_benchmark,
    spawn_seeds,
    summary_curve_band,
)
from activity_space.export import (
    FLOAT_FORMAT,
    MANIFEST_FILENAME,
    build_manifest,
    rank_field_filename,
    write_manifest,
    write_points_csv,
)
from activity_space.ingest import (
    ProjectionReference,
    is_gps_csv,
    parse_gps_csv,
    project,
    read_points_csv,
)
from activity_space.metrics import (
    AnchorCoverageCollector,
    BettiMaximumCollector,
    PersistentComponentCollector,
)
from activity_space.mixture import MixtureModel, load_model, sample
from activity_space.pipeline import ActivitySpacePipeline
from activity_space.topology import CurveKind

logger = logging.getLogger(__name__)

BENCHMARK_FILENAME = "benchmark.csv"
SWEEP_SUMMARY_FILENAME = "sweep_summary.csv"
STATISTICS_FILENAME = "replicate_statistics.json"
DIVERGENCE_SAMPLE_SIZE = 20_000


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers: {text}")


def _bbox(text: str) -> BoundingBox:
    try:
        return BoundingBox.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _command_line(argv: List[str]) -> str:
    return " ".join(["activity-space"] + argv)


def _analysis_config(
    args: argparse.Namespace, bandwidth: Optional[float] = None
) -> AnalysisConfig:
    return AnalysisConfig(
        bandwidth=args.bandwidth if bandwidth is None else bandwidth,
        cell_size=args.cell_size,
        connectivity=args.connectivity,
        step=args.step,
        gammas=tuple(args.gamma) if args.gamma is not None else DEFAULT_GAMMAS,
        bbox=args.bbox,
        seed=args.seed,
        output_dir=str(args.out),
    )


def _safe_name(device_id: str) -> str:
    name = re.sub(r"[^A-Za-z0-9._-]+", "_", device_id).strip(".")
    return name or "device"


def _unique_name(device_id: str, taken: Dict[str, str]) -> str:
    """Sub-directory for ``device_id`` that no earlier device in ``taken`` uses."""
    base = name = _safe_name(device_id)
    suffix = 1
    while name in taken:
        suffix += 1
        name = f"{base}-{suffix}"
    if name != base:
        logger.warning(
            f"device '{device_id}' would share the directory '{base}' with device "
            f"'{taken[base]}', writing it to '{name}'"
        )
    return name


def load_point_sets(path: Path) -> Dict[str, Tuple[np.ndarray, Dict[str, Any]]]:
    """Planar point sets of an input file keyed by output sub-directory.

    A points CSV gives a single set written to the output directory itself. A GPS CSV gives one
    set per device, projected around the centroid of its fixes.
    """
    if not is_gps_csv(path):
        return {"": (read_points_csv(path), {})}
    trajectories = parse_gps_csv(path)
    if not trajectories:
        raise ValueError(f"{path}: no GPS fixes found")
    point_sets = {}
    taken: Dict[str, str] = {}
    for trajectory in trajectories:
        ref = ProjectionReference.centroid_of(trajectory)
        details = {
            "device_id": trajectory.device_id,
            "projection": {"lat0": ref.lat0, "lon0": ref.lon0},
        }
        name = _unique_name(trajectory.device_id, taken)
        taken[name] = trajectory.device_id
        point_sets[name] = (project(trajectory, ref), details)
    return point_sets


def cmd_simulate(args: argparse.Namespace) -> None:
    if args.n < 1:
        raise ConfigError(f"sample size must be at least 1, got --n {args.n}")
    model = load_model(args.model)
    points = sample(model, args.n, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_points_csv(points, out)
    logger.info(f"wrote {len(points)} samples to {out}")


def cmd_analyze(args: argparse.Namespace) -> None:
    config = _analysis_config(args)
    pipeline = ActivitySpacePipeline(config, show_progress_bar=args.verbose)
    for subdir, (points, details) in load_point_sets(args.input).items():
        result = pipeline(points)
        manifest = build_manifest(
            _command_line(args.argv),
            config.to_dict(),
            input_path=args.input,
            n_points=len(result.points),  # type: ignore
            **details,
        )
        result.save(Path(args.out) / subdir, manifest)  # type: ignore


def replicate_statistics(
    model: MixtureModel,
    replicates: List[Replicate],
    gammas: List[float],
    config: AnalysisConfig,
    curves: bool = False,
) -> Dict[str, Any]:
    """Anchor coverage of the level set at ``pi0`` and, with ``curves``, the number of
    persistent components and the Betti maximum of every replicate, aggregated."""
    statistics: Dict[str, Any] = {}
    anchors_gamma, _ = recovery_levels(model)
    if anchors_gamma in gammas:
        coverage = AnchorCoverageCollector(
            model,
            gamma=anchors_gamma,
            aggregation_functions=["mean", "min", "len"],
            show_as_markdown=True,
            title=f"anchor coverage (gamma={anchors_gamma:g})",
        )
        statistics["anchor_coverage"] = coverage(replicates)
    if curves:
        collectors = {
            "persistent_components": PersistentComponentCollector(
                connectivity=config.connectivity,
                aggregation_functions=["mean", "median", "min", "max"],
                show_as_markdown=True,
                title="components with persistence of at least 0.3",
            ),
            "betti_max": BettiMaximumCollector(
                step=config.step,
                connectivity=config.connectivity,
                aggregation_functions=["mean", "median", "min", "max"],
                show_as_markdown=True,
                title="Betti curve maximum",
            ),
        }
        for name, collector in collectors.items():
            statistics[name] = collector(replicates)
    return statistics


def cmd_bench(args: argparse.Namespace) -> None:
    config = _analysis_config(args)
    model = load_model(args.model)
    gammas = args.gamma if args.gamma is not None else list(BENCHMARK_GAMMAS)
    table, replicates = run_benchmark(  # type: ignore
        model,
        args.n,
        args.reps,
        args.seed,
        config,
        gammas=gammas,
        n_jobs=args.jobs,
        show_progress_bar=args.verbose,
        show_as_markdown=True,
        keep_replicates=True,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / BENCHMARK_FILENAME, index=False, float_format=FLOAT_FORMAT)
    statistics = replicate_statistics(
        model, replicates, [float(g) for g in gammas], config, curves=args.curves
    )
    write_manifest(statistics, out / STATISTICS_FILENAME)
    if args.curves:
        for kind in CurveKind:
            band = summary_curve_band(replicates, kind, config.levels(), config.connectivity)
            band.to_csv(
                out / f"summary_{kind.value.replace('-', '_')}.csv",
                index=False,
                float_format=FLOAT_FORMAT,
            )
    manifest = build_manifest(
        _command_line(args.argv),
        config.to_dict(),
        input_path=args.model,
        n=args.n,
        reps=args.reps,
        gammas=[float(g) for g in gammas],
    )
    write_manifest(manifest, out / MANIFEST_FILENAME)


def cmd_sweep(args: argparse.Namespace) -> None:
    bandwidths = check_bandwidths(args.bandwidth)
    config = _analysis_config(args, bandwidth=bandwidths[0])
    for subdir, (points, details) in load_point_sets(args.input).items():
        out = Path(args.out) / subdir
        fields, summary = bandwidth_sweep(
            points, bandwidths, config, show_progress_bar=args.verbose
        )
        out.mkdir(parents=True, exist_ok=True)
        for h, rank_field in fields.items():
            write_esri_ascii(rank_field, out / rank_field_filename(h))
        summary.to_csv(out / SWEEP_SUMMARY_FILENAME, index=False, float_format="%g")
        manifest = build_manifest(
            _command_line(args.argv),
            config.to_dict(),
            input_path=args.input,
            bandwidths=list(fields),
            **details,
        )
        write_manifest(manifest, out / MANIFEST_FILENAME)


def cmd_validate(args: argparse.Namespace) -> None:
    if args.reps < 1:
        raise ConfigError(f"need at least one seed, got --reps {args.reps}")
    model = load_model(args.model)
    seeds = list(range(args.seed, args.seed + args.reps))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    consistency, consistency_medians = ranking_consistency(
        model, seeds=seeds, show_progress_bar=args.verbose
    )
    consistency.to_csv(out / "ranking_consistency.csv", index=False, float_format=FLOAT_FORMAT)
    logger.info(f"ranking consistency, median error per n:\n{consistency_medians.to_markdown()}")

    cell_size = 0.05 if args.cell_size is None else args.cell_size
    recovery, recovery_medians = level_set_recovery(
        model,
        seeds=seeds,
        h=args.bandwidth,
        cell_size=cell_size,
        show_progress_bar=args.verbose,
    )
    recovery.to_csv(out / "level_set_recovery.csv", index=False, float_format=FLOAT_FORMAT)
    logger.info(f"level set recovery, median errors per n:\n{recovery_medians.to_markdown()}")

    points = sample(model, DIVERGENCE_SAMPLE_SIZE, spawn_seeds(args.seed, 1)[0])
    divergence = kde_divergence(points, (0.0, 0.0), DIVERGENCE_BANDWIDTHS)
    divergence.to_csv(out / "kde_divergence.csv", index=False, float_format=FLOAT_FORMAT)

    manifest = build_manifest(
        _command_line(args.argv),
        {"bandwidth": args.bandwidth, "cell_size": cell_size, "seeds": seeds},
        input_path=args.model,
    )
    write_manifest(manifest, out / MANIFEST_FILENAME)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--verbose", action="store_true", help="debug logging and progress")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--cell-size", type=float, default=None, help="default: bandwidth / 4")
    grid.add_argument("--step", type=float, default=0.01, help="level step of the curves")
    grid.add_argument("--connectivity", type=int, choices=[4, 8], default=8)
    grid.add_argument("--gamma", type=_float_list, default=None, help="comma separated levels")
    grid.add_argument("--bbox", type=_bbox, default=None, help="xmin,ymin,xmax,ymax")

    parser = argparse.ArgumentParser(
        prog="activity-space",
        description="Activity spaces from GPS points by density ranking and topological curves.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser(
        "simulate", parents=[common], help="draw points from a mixture model"
    )
    simulate.add_argument("--model", type=Path, default=None, help="default: bundled model")
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--out", type=Path, required=True, help="output x,y CSV")
    simulate.set_defaults(func=cmd_simulate)

    analyze = subparsers.add_parser(
        "analyze", parents=[common, grid], help="rank a points or GPS CSV and export curves"
    )
    analyze.add_argument("input", type=Path)
    analyze.add_argument("--bandwidth", type=float, required=True)
    analyze.add_argument("--out", type=Path, required=True, help="output directory")
    analyze.set_defaults(func=cmd_analyze)

    bench = subparsers.add_parser(
        "bench", parents=[common, grid], help="compare level-set estimators on simulations"
    )
    bench.add_argument("--model", type=Path, default=None, help="default: bundled model")
    bench.add_argument("--n", type=int, default=8_000)
    bench.add_argument("--reps", type=int, default=100)
    bench.add_argument("--bandwidth", type=float, default=0.5)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--curves", action="store_true", help="also write curve summaries")
    bench.add_argument("--out", type=Path, required=True, help="output directory")
    bench.set_defaults(func=cmd_bench)

    sweep = subparsers.add_parser(
        "sweep", parents=[common, grid], help="ranking fields over several bandwidths"
    )
    sweep.add_argument("input", type=Path)
    sweep.add_argument(
        "--bandwidth", type=_float_list, required=True, help="comma separated bandwidths"
    )
    sweep.add_argument("--out", type=Path, required=True, help="output directory")
    sweep.set_defaults(func=cmd_sweep)

    validate = subparsers.add_parser(
        "validate", parents=[common], help="empirical consistency checks on a mixture model"
    )
    validate.add_argument("--model", type=Path, default=None, help="default: bundled model")
    validate.add_argument("--reps", type=int, default=10, help="number of seeds")
    validate.add_argument(
        "--bandwidth", type=float, default=None, help="default: n ** (-1/7) per sample size"
    )
    validate.add_argument("--cell-size", type=float, default=None, help="default: 0.05")
    validate.add_argument("--out", type=Path, required=True, help="output directory")
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    func: Callable[[argparse.Namespace], None] = args.func
    try:
        func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0
