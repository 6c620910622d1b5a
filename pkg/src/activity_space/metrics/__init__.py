from .statistics import (
    AnchorCoverageCollector,
    BettiMaximumCollector,
    PersistentComponentCollector,
)
from .symmetric_difference import SymmetricDifferenceMetric

__all__ = [
    "SymmetricDifferenceMetric",
    "BettiMaximumCollector",
    "PersistentComponentCollector",
    "AnchorCoverageCollector",
]
