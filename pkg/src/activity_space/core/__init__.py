from activity_space.core.grid import (
    BoundingBox,
    CellIndex,
    CellSet,
    OutsideExtentError,
    RasterGrid,
    ScalarField,
    make_grid,
    read_esri_ascii,
    to_esri_ascii,
    write_esri_ascii,
)
from activity_space.core.metric import ReplicateMetric
from activity_space.core.registrable import Registrable, RegistrationError
from activity_space.core.replicate import Replicate
from activity_space.core.statistic import ReplicateStatistic

__all__ = [
    "BoundingBox",
    "CellIndex",
    "CellSet",
    "OutsideExtentError",
    "RasterGrid",
    "Registrable",
    "RegistrationError",
    "Replicate",
    "ReplicateMetric",
    "ReplicateStatistic",
    "ScalarField",
    "make_grid",
    "read_esri_ascii",
    "to_esri_ascii",
    "write_esri_ascii",
]
