import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from activity_space.config import AnalysisConfig
from activity_space.core.grid import (
    BoundingBox,
    CellSet,
    RasterGrid,
    ScalarField,
    make_grid,
    write_esri_ascii,
)
from activity_space.core.replicate import Replicate
from activity_space.estimators import DensityRankingEstimator, LevelSetEstimator
from activity_space.export import (
    CURVE_FILENAMES,
    DENSITY_FIELD_FILENAME,
    MANIFEST_FILENAME,
    PAIRS_FILENAME,
    RANK_FIELD_FILENAME,
    SAMPLE_ALPHA_FILENAME,
    level_set_filename,
    write_curve_csv,
    write_manifest,
    write_pairs_csv,
    write_sample_alpha_csv,
)
from activity_space.ingest import clip_bbox
from activity_space.kde import as_point_array, kde_at_samples, kde_field
from activity_space.ranking import RankingIndex, build_ranking_index, rank_field
from activity_space.topology import (
    CurveKind,
    PersistencePair,
    SummaryCurve,
    betti_curve,
    mass_volume_curve,
    persistence_curve,
    persistence_pairs,
)

logger = logging.getLogger(__name__)

PRIMARY_ESTIMATOR = "density_ranking"


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    """Everything derived from one point set.

    ``level_sets`` maps an estimator name to its level sets keyed by gamma. The curves and the
    persistence pairs are None when the pipeline ran with ``compute_curves=False``.
    """

    config: AnalysisConfig
    points: np.ndarray
    grid: RasterGrid
    density_field: ScalarField
    sample_densities: np.ndarray
    ranking_index: RankingIndex
    rank_field: ScalarField
    level_sets: Dict[str, Dict[float, CellSet]] = field(default_factory=dict)
    mass_volume: Optional[SummaryCurve] = None
    betti: Optional[SummaryCurve] = None
    persistence: Optional[SummaryCurve] = None
    pairs: Optional[List[PersistencePair]] = None
    name: Optional[str] = None

    @property
    def sample_alpha(self) -> np.ndarray:
        return self.ranking_index.alpha_at(self.sample_densities)

    @property
    def curves(self) -> Dict[CurveKind, SummaryCurve]:
        candidates = {
            CurveKind.MASS_VOLUME: self.mass_volume,
            CurveKind.BETTI: self.betti,
            CurveKind.PERSISTENCE: self.persistence,
        }
        return {kind: curve for kind, curve in candidates.items() if curve is not None}

    def to_replicate(self, seed: Optional[int] = None) -> Replicate:
        return Replicate(
            points=self.points,
            grid=self.grid,
            bandwidth=self.config.bandwidth,
            density_field=self.density_field,
            rank_field=self.rank_field,
            level_sets=self.level_sets,
            seed=seed,
            name=self.name,
        )

    def save(
        self, out_dir: Union[str, Path], manifest: Optional[Dict[str, Any]] = None
    ) -> List[Path]:
        """Write all artifacts into ``out_dir`` (created if needed) and return their paths."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [
            write_esri_ascii(self.rank_field, out_dir / RANK_FIELD_FILENAME),
            write_esri_ascii(self.density_field, out_dir / DENSITY_FIELD_FILENAME),
            write_sample_alpha_csv(self.sample_alpha, out_dir / SAMPLE_ALPHA_FILENAME),
        ]
        for kind, curve in self.curves.items():
            written.append(write_curve_csv(curve, out_dir / CURVE_FILENAMES[kind]))
        if self.pairs is not None:
            written.append(write_pairs_csv(self.pairs, out_dir / PAIRS_FILENAME))
        for estimator, level_sets in self.level_sets.items():
            prefix = "" if estimator == PRIMARY_ESTIMATOR else f"{estimator}_"
            for gamma, cells in level_sets.items():
                path = out_dir / f"{prefix}{level_set_filename(gamma)}"
                written.append(write_esri_ascii(cells, path))
        if manifest is not None:
            written.append(write_manifest(manifest, out_dir / MANIFEST_FILENAME))
        logger.info(f"wrote {len(written)} artifacts to {out_dir}")
        return written


class ActivitySpacePipeline:
    """Density ranking and topological summaries for planar point sets.

    Calling the pipeline runs, for each point set: clipping to the configured bounding box,
    grid construction (data extent padded by the bandwidth, cell centers on the lattice),
    the density field and the sample densities, the ranking field, the three summary curves
    with the persistence pairs, and finally the level sets of every requested estimator.

    Keyword arguments given to the constructor are defaults that ``__call__`` can override:

    - ``show_progress_bar`` (bool): progress over the point sets and the Betti levels,
    - ``compute_curves`` (bool, default True): skip curves and pairs when False,
    - ``estimators`` (list of registered :class:`LevelSetEstimator` names, default
      ``["density_ranking"]``),
    - ``gammas`` (levels of the exported level sets, default ``config.gammas``).
    """

    def __init__(self, config: AnalysisConfig, **kwargs) -> None:
        self.config = config
        (
            self._preprocess_params,
            self._forward_params,
            self._postprocess_params,
        ) = self._sanitize_parameters(**kwargs)

    def _sanitize_parameters(
        self, **pipeline_parameters
    ) -> Tuple[Dict[str, Any], Dict[str, Any], Dict[str, Any]]:
        preprocess_parameters: Dict[str, Any] = {}
        forward_parameters: Dict[str, Any] = {}
        postprocess_parameters: Dict[str, Any] = {}

        for p_name in ["bbox"]:
            if p_name in pipeline_parameters:
                preprocess_parameters[p_name] = pipeline_parameters.pop(p_name)

        for p_name in ["show_progress_bar", "compute_curves"]:
            if p_name in pipeline_parameters:
                forward_parameters[p_name] = pipeline_parameters.pop(p_name)

        for p_name in ["estimators", "gammas"]:
            if p_name in pipeline_parameters:
                postprocess_parameters[p_name] = pipeline_parameters.pop(p_name)

        if pipeline_parameters:
            raise TypeError(f"unknown pipeline parameters: {sorted(pipeline_parameters)}")
        return preprocess_parameters, forward_parameters, postprocess_parameters

    def grid_for(self, points: np.ndarray, bbox: Optional[BoundingBox] = None) -> RasterGrid:
        extent = bbox or BoundingBox.from_points(points)
        return make_grid(
            extent.pad(self.config.bandwidth), self.config.resolved_cell_size, align=True
        )

    def preprocess(
        self, points: np.ndarray, bbox: Optional[BoundingBox] = None
    ) -> Tuple[np.ndarray, RasterGrid]:
        bbox = bbox or self.config.bbox
        points = np.asarray(points, dtype=float)
        if bbox is not None:
            points = clip_bbox(points, bbox)
        points = as_point_array(points)
        return points, self.grid_for(points, bbox)

    def _forward(
        self,
        points: np.ndarray,
        grid: RasterGrid,
        show_progress_bar: bool = False,
        compute_curves: bool = True,
    ) -> Dict[str, Any]:
        h = self.config.bandwidth
        kernel = self.config.kernel
        density = kde_field(points, grid, h, kernel=kernel)
        sample_densities = kde_at_samples(points, h, kernel=kernel)
        index = build_ranking_index(sample_densities)
        outputs: Dict[str, Any] = {
            "density_field": density,
            "sample_densities": sample_densities,
            "ranking_index": index,
            "rank_field": rank_field(index, density),
        }
        if compute_curves:
            levels = self.config.levels()
            conn = self.config.resolved_connectivity
            pairs = persistence_pairs(outputs["rank_field"], conn)
            outputs["mass_volume"] = mass_volume_curve(outputs["rank_field"], levels)
            outputs["betti"] = betti_curve(
                outputs["rank_field"], levels, conn, show_progress_bar=show_progress_bar
            )
            outputs["persistence"] = persistence_curve(pairs, np.concatenate(([0.0], levels)))
            outputs["pairs"] = pairs
        return outputs

    def postprocess(
        self,
        model_outputs: Dict[str, Any],
        estimators: Sequence[str] = (PRIMARY_ESTIMATOR,),
        gammas: Optional[Sequence[float]] = None,
    ) -> Dict[str, Dict[float, CellSet]]:
        gammas = self.config.gammas if gammas is None else gammas
        level_sets: Dict[str, Dict[float, CellSet]] = {}
        for name in estimators:
            estimator_class = LevelSetEstimator.by_name(name)
            if estimator_class is DensityRankingEstimator:
                estimator = DensityRankingEstimator()
                estimator.density_field = model_outputs["density_field"]
                estimator.ranking_index = model_outputs["ranking_index"]
                estimator.rank_field = model_outputs["rank_field"]
            else:
                estimator = estimator_class().fit_densities(
                    model_outputs["density_field"], model_outputs["sample_densities"]
                )
            level_sets[name] = estimator.level_sets(gammas)
        return level_sets

    def _run_single(
        self,
        points: np.ndarray,
        name: Optional[str],
        preprocess_params: Dict[str, Any],
        forward_params: Dict[str, Any],
        postprocess_params: Dict[str, Any],
    ) -> AnalysisResult:
        points, grid = self.preprocess(points, **preprocess_params)
        logger.info(
            f"analysing {len(points)} points{'' if name is None else f' of {name}'} on a "
            f"{grid.nrows}x{grid.ncols} grid (h={self.config.bandwidth}, "
            f"cell size={grid.cell_size})"
        )
        outputs = self._forward(points, grid, **forward_params)
        level_sets = self.postprocess(outputs, **postprocess_params)
        return AnalysisResult(
            config=self.config,
            points=points,
            grid=grid,
            level_sets=level_sets,
            name=name,
            **outputs,
        )

    def __call__(
        self,
        points: Union[np.ndarray, Dict[str, np.ndarray]],
        **kwargs,
    ) -> Union[AnalysisResult, Dict[str, AnalysisResult]]:
        """Analyse a point array, or each entry of a dict of named point arrays (for instance
        one per device). The result mirrors the input: a single result or a dict keyed like
        the input."""
        preprocess_params, forward_params, postprocess_params = self._sanitize_parameters(
            **kwargs
        )
        preprocess_params = {**self._preprocess_params, **preprocess_params}
        forward_params = {**self._forward_params, **forward_params}
        postprocess_params = {**self._postprocess_params, **postprocess_params}

        if not isinstance(points, dict):
            return self._run_single(
                points, None, preprocess_params, forward_params, postprocess_params
            )
        return {
            name: self._run_single(
                values, name, preprocess_params, forward_params, postprocess_params
            )
            for name, values in tqdm(
                points.items(),
                desc="point sets",
                disable=not forward_params.get("show_progress_bar", False),
            )
        }
