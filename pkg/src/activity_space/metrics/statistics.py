import logging

from activity_space.core import Replicate, ReplicateStatistic
from activity_space.mixture import MixtureModel, atom_cells
from activity_space.topology import (
    Connectivity,
    betti_from_pairs,
    default_levels,
    persistence_pairs,
)

logger = logging.getLogger(__name__)


class BettiMaximumCollector(ReplicateStatistic):
    """Collects the largest number of connected components over the levels of the Betti curve
    of a replicate's ranking field."""

    def __init__(self, step: float = 0.01, connectivity: int = 8, **kwargs) -> None:
        super().__init__(**kwargs)
        self.levels = default_levels(step)
        self.connectivity = Connectivity.parse(connectivity)

    def _collect(self, replicate: Replicate) -> int:
        pairs = persistence_pairs(replicate.rank_field, self.connectivity)
        return int(betti_from_pairs(pairs, self.levels).max())


class PersistentComponentCollector(ReplicateStatistic):
    """Collects the number of components whose persistence reaches ``threshold``."""

    def __init__(self, threshold: float = 0.3, connectivity: int = 8, **kwargs) -> None:
        super().__init__(**kwargs)
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
        self.threshold = threshold
        self.connectivity = Connectivity.parse(connectivity)

    def _collect(self, replicate: Replicate) -> int:
        pairs = persistence_pairs(replicate.rank_field, self.connectivity)
        return sum(1 for pair in pairs if pair.persistence >= self.threshold)


class AnchorCoverageCollector(ReplicateStatistic):
    """Collects 1 if the level set at ``gamma`` contains the cell of every anchor, else 0.

    The mean over replicates is the coverage rate.
    """

    def __init__(
        self,
        model: MixtureModel,
        gamma: float = 0.6,
        estimator: str = "density_ranking",
        **kwargs,
    ) -> None:
        super().__init__(**kwargs)
        self.model = model
        self.gamma = gamma
        self.estimator = estimator

    def _collect(self, replicate: Replicate) -> int:
        level_set = replicate.level_set(self.estimator, self.gamma)
        return int(atom_cells(self.model, replicate.grid).issubset(level_set))
