import dataclasses
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from activity_space.core.grid import BoundingBox
from activity_space.kde import Kernel
from activity_space.topology import Connectivity, default_levels

DEFAULT_GAMMAS: Tuple[float, ...] = (0.6, 0.9)
# default cell size as a fraction of the bandwidth
DEFAULT_CELLS_PER_BANDWIDTH = 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    """Parameters of one analysis run.

    ``cell_size`` defaults to a quarter of the bandwidth. ``bbox`` restricts the analysis to the
    points inside it (and the grid to the box padded by the bandwidth). ``gammas`` are the
    levels whose level-set masks are exported.
    """

    bandwidth: float
    cell_size: Optional[float] = None
    connectivity: int = 8
    step: float = 0.01
    gammas: Tuple[float, ...] = DEFAULT_GAMMAS
    bbox: Optional[BoundingBox] = None
    seed: int = 0
    kernel: str = "quartic"
    output_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if not (isinstance(self.bandwidth, (int, float)) and math.isfinite(self.bandwidth)):
            raise ConfigError(f"bandwidth must be a finite number, got {self.bandwidth!r}")
        if self.bandwidth <= 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.cell_size is not None and not (
            math.isfinite(self.cell_size) and self.cell_size > 0
        ):
            raise ConfigError(f"cell_size must be positive, got {self.cell_size}")
        try:
            Connectivity.parse(self.connectivity)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if not 0 < self.step <= 0.5:
            raise ConfigError(f"level step must lie in (0, 0.5], got {self.step}")
        if any(not 0.0 <= g <= 1.0 for g in self.gammas):
            raise ConfigError(f"gammas must lie in [0, 1], got {list(self.gammas)}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.kernel not in Kernel.registered_names():
            raise ConfigError(
                f"unknown kernel '{self.kernel}', available: {Kernel.registered_names()}"
            )

    @property
    def resolved_cell_size(self) -> float:
        if self.cell_size is not None:
            return float(self.cell_size)
        return self.bandwidth / DEFAULT_CELLS_PER_BANDWIDTH

    @property
    def resolved_connectivity(self) -> Connectivity:
        return Connectivity.parse(self.connectivity)

    def levels(self) -> np.ndarray:
        return default_levels(self.step)

    def replace(self, **changes) -> "AnalysisConfig":
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as e:
            raise ConfigError(f"invalid configuration: {e}") from e

    def _config(self) -> Dict[str, Any]:
        return {
            "bandwidth": self.bandwidth,
            "cell_size": self.cell_size,
            "connectivity": self.connectivity,
            "step": self.step,
            "gammas": self.gammas,
            "bbox": self.bbox,
            "seed": self.seed,
            "kernel": self.kernel,
            "output_dir": self.output_dir,
        }

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready configuration including the resolved cell size."""
        config = self._config()
        config["gammas"] = list(self.gammas)
        config["bbox"] = asdict(self.bbox) if self.bbox is not None else None
        config["resolved_cell_size"] = self.resolved_cell_size
        return config

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> "AnalysisConfig":
        config = dict(config)
        config.pop("resolved_cell_size", None)
        bbox = config.get("bbox")
        if isinstance(bbox, dict):
            config["bbox"] = BoundingBox(**bbox)
        try:
            return cls(**config)
        except TypeError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
