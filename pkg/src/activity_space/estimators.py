"""Level-set estimators compared by the benchmark.

Both estimators start from the same kernel density estimate. Density ranking thresholds the
ranking field at ``1 - gamma``; the KDE baseline thresholds the raw density at
``gamma * max density``.
"""
from typing import Dict, Iterable, Optional, Union

import numpy as np

from activity_space.core.grid import CellSet, RasterGrid, ScalarField
from activity_space.core.registrable import Registrable
from activity_space.kde import Kernel, kde_at_samples, kde_field
from activity_space.ranking import (
    RankingIndex,
    build_ranking_index,
    check_gamma,
    level_set,
    rank_field,
)


class NotFittedError(RuntimeError):
    pass


class LevelSetEstimator(Registrable):
    def __init__(self) -> None:
        self.density_field: Optional[ScalarField] = None

    def fit(
        self,
        points: np.ndarray,
        grid: RasterGrid,
        h: float,
        kernel: Union[str, Kernel] = "quartic",
    ) -> "LevelSetEstimator":
        return self.fit_densities(
            kde_field(points, grid, h, kernel=kernel), kde_at_samples(points, h, kernel=kernel)
        )

    def fit_densities(
        self, density_field: ScalarField, sample_densities: np.ndarray
    ) -> "LevelSetEstimator":
        """Fit from precomputed densities, so several estimators can share one evaluation."""
        self.density_field = density_field
        return self

    def _check_fitted(self) -> ScalarField:
        if self.density_field is None:
            raise NotFittedError(f"{type(self).__name__} has to be fitted first")
        return self.density_field

    def level_set(self, gamma: float) -> CellSet:
        raise NotImplementedError

    def level_sets(self, gammas: Iterable[float]) -> Dict[float, CellSet]:
        return {float(gamma): self.level_set(gamma) for gamma in gammas}


@LevelSetEstimator.register("density_ranking")
class DensityRankingEstimator(LevelSetEstimator):
    def __init__(self) -> None:
        super().__init__()
        self.ranking_index: Optional[RankingIndex] = None
        self.rank_field: Optional[ScalarField] = None

    def fit_densities(
        self, density_field: ScalarField, sample_densities: np.ndarray
    ) -> "DensityRankingEstimator":
        super().fit_densities(density_field, sample_densities)
        self.ranking_index = build_ranking_index(sample_densities)
        self.rank_field = rank_field(self.ranking_index, density_field)
        return self

    def level_set(self, gamma: float) -> CellSet:
        self._check_fitted()
        assert self.rank_field is not None
        return level_set(self.rank_field, gamma)


@LevelSetEstimator.register("kde")
class KdeThresholdEstimator(LevelSetEstimator):
    def level_set(self, gamma: float) -> CellSet:
        density = self._check_fitted()
        gamma = check_gamma(gamma)
        return CellSet(density.grid, density.values >= gamma * density.max())
