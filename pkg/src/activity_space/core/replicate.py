from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from activity_space.core.grid import CellSet, RasterGrid, ScalarField


@dataclass(frozen=True, eq=False)
class Replicate:
    """One analysed point set: a simulated sample or the fixes of one device.

    ``level_sets`` maps an estimator name (see
    :class:`~activity_space.estimators.LevelSetEstimator`) to its level sets keyed by gamma.
    """

    points: np.ndarray
    grid: RasterGrid
    bandwidth: float
    density_field: ScalarField
    rank_field: ScalarField
    level_sets: Dict[str, Dict[float, CellSet]] = field(default_factory=dict)
    seed: Optional[int] = None
    name: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.points)

    def level_set(self, estimator: str, gamma: float) -> CellSet:
        try:
            return self.level_sets[estimator][gamma]
        except KeyError:
            raise KeyError(
                f"replicate has no level set for estimator '{estimator}' at gamma={gamma}"
            ) from None
