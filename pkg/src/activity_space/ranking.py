"""Density ranking: the fraction of samples whose density does not exceed a given density.

Ranks are invariant under any positive rescaling of the densities, so the normalisation of the
density estimate never matters here.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from activity_space.core.grid import CellSet, ScalarField


def check_gamma(gamma: float, name: str = "gamma") -> float:
    value = float(gamma)
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {gamma}")
    return value


@dataclass(frozen=True, eq=False)
class RankingIndex:
    """Sorted sample densities plus the samples' densities in their original order."""

    sorted_densities: np.ndarray
    sample_densities: np.ndarray

    @property
    def n(self) -> int:
        return len(self.sorted_densities)

    def alpha_at(self, densities: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        values = np.asarray(densities, dtype=float)
        if not np.isfinite(values).all():
            raise ValueError("densities must be finite")
        alpha = np.searchsorted(self.sorted_densities, values, side="right") / self.n
        return float(alpha) if alpha.ndim == 0 else alpha


def build_ranking_index(sample_densities: Iterable[float]) -> RankingIndex:
    """
    >>> build_ranking_index([3.0, 1.0, 2.0]).sorted_densities.tolist()
    [1.0, 2.0, 3.0]
    """
    if not isinstance(sample_densities, np.ndarray):
        sample_densities = list(sample_densities)
    densities = np.array(sample_densities, dtype=float).reshape(-1)
    if len(densities) == 0:
        raise ValueError("cannot rank against an empty set of sample densities")
    if not np.isfinite(densities).all():
        raise ValueError("sample densities must be finite")
    if (densities < 0).any():
        raise ValueError(f"sample densities must be non-negative, got min {densities.min()}")
    sorted_densities = np.sort(densities, kind="stable")
    sorted_densities.setflags(write=False)
    densities.setflags(write=False)
    return RankingIndex(sorted_densities=sorted_densities, sample_densities=densities)


def alpha_at(index: RankingIndex, density: float) -> float:
    """
    >>> alpha_at(build_ranking_index([1, 2, 2, 4]), 2)
    0.75
    """
    return index.alpha_at(float(density))  # type: ignore[return-value]


def rank_field(index: RankingIndex, density_field: ScalarField) -> ScalarField:
    return ScalarField(density_field.grid, index.alpha_at(density_field.values))


def sample_rankings(index: RankingIndex) -> np.ndarray:
    """Ranking of every sample against all samples; tied samples share the largest rank."""
    return index.alpha_at(index.sample_densities)  # type: ignore[return-value]


def level_set(rank_field: ScalarField, gamma: float) -> CellSet:
    """Cells whose ranking is at least ``1 - gamma``."""
    gamma = check_gamma(gamma)
    return CellSet(rank_field.grid, rank_field.values >= 1.0 - gamma)


def level_band(rank_field: ScalarField, gamma_low: float, gamma_high: float) -> CellSet:
    """Cells in the ``gamma_high`` level set but not in the ``gamma_low`` one.

    With ``gamma_low = pi0`` and ``gamma_high = pi0 + pi1`` of a mixture model this is the
    estimate of the road network.
    """
    gamma_low = check_gamma(gamma_low, "gamma_low")
    gamma_high = check_gamma(gamma_high, "gamma_high")
    if gamma_low > gamma_high:
        raise ValueError(f"gamma_low ({gamma_low}) must not exceed gamma_high ({gamma_high})")
    return level_set(rank_field, gamma_high) - level_set(rank_field, gamma_low)
