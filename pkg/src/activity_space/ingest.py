"""GPS CSV ingestion and local planar projection.

Input files carry one fix per row with the columns ``id,timestamp,lat,lon`` and an optional
``accuracy`` (meters). Column names are matched case-insensitively and in any order.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from activity_space.core.grid import BoundingBox

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
REQUIRED_COLUMNS = ("id", "timestamp", "lat", "lon")
OPTIONAL_COLUMNS = ("accuracy",)
# data rows start on the second line of the file
_FIRST_DATA_LINE = 2


class GpsParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class GpsFix:
    device_id: str
    timestamp: pd.Timestamp
    lat: float
    lon: float
    accuracy: Optional[float] = None

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} is outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} is outside [-180, 180]")
        if self.accuracy is not None and not self.accuracy >= 0:
            raise ValueError(f"accuracy must be non-negative, got {self.accuracy}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    device_id: str
    fixes: Tuple[GpsFix, ...]

    def __post_init__(self):
        object.__setattr__(self, "fixes", tuple(self.fixes))
        for previous, current in zip(self.fixes, self.fixes[1:]):
            if not previous.timestamp < current.timestamp:
                raise ValueError(
                    f"fixes of device '{self.device_id}' are not strictly increasing in time at "
                    f"{current.timestamp}"
                )

    def __len__(self) -> int:
        return len(self.fixes)

    @property
    def latitudes(self) -> np.ndarray:
        return np.asarray([f.lat for f in self.fixes], dtype=float)

    @property
    def longitudes(self) -> np.ndarray:
        return np.asarray([f.lon for f in self.fixes], dtype=float)


@dataclass(frozen=True)
class ProjectionReference:
    lat0: float
    lon0: float

    def __post_init__(self):
        if not (-90.0 <= self.lat0 <= 90.0 and -180.0 <= self.lon0 <= 180.0):
            raise ValueError(f"invalid projection reference ({self.lat0}, {self.lon0})")

    @classmethod
    def centroid_of(cls, trajectory: Trajectory) -> "ProjectionReference":
        if len(trajectory) == 0:
            raise ValueError(f"trajectory '{trajectory.device_id}' has no fixes")
        return cls(float(trajectory.latitudes.mean()), float(trajectory.longitudes.mean()))


def _first_failure(frame: pd.DataFrame, checks: List[Tuple[pd.Series, str]]) -> None:
    """Raise for the earliest row failing any check; ``checks`` pairs a failure mask with a
    message template formatted with that row."""
    failing = [
        (int(np.argmax(mask.to_numpy())), message) for mask, message in checks if mask.any()
    ]
    if not failing:
        return
    position, message = min(failing, key=lambda item: item[0])
    row = frame.iloc[position]
    raise GpsParseError(message.format(**row.to_dict()), line=int(row["_line"]))


def _read_frame(source: Union[str, Path, TextIO]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise GpsParseError("input has no header row", line=1) from None
    except pd.errors.ParserError as e:
        raise GpsParseError(f"malformed CSV: {e}") from e
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise GpsParseError(
            f"header must contain the columns {','.join(REQUIRED_COLUMNS)}; missing "
            f"{','.join(missing)}",
            line=1,
        )
    frame = frame.fillna("")
    frame["_line"] = np.arange(len(frame)) + _FIRST_DATA_LINE
    blank = (frame[list(REQUIRED_COLUMNS)].apply(lambda c: c.str.strip()) == "").all(axis=1)
    return frame.loc[~blank].reset_index(drop=True)


def parse_gps_frame(source: Union[str, Path, TextIO]) -> pd.DataFrame:
    """Validated fixes as a frame with the columns ``id, timestamp, lat, lon, accuracy``,
    deduplicated and sorted by device id and then stably by time."""
    raw = _read_frame(source)
    frame = pd.DataFrame(
        {
            "id": raw["id"].str.strip(),
            "timestamp": pd.to_datetime(
                raw["timestamp"].str.strip(), utc=True, errors="coerce", format="ISO8601"
            ),
            "lat": pd.to_numeric(raw["lat"].str.strip(), errors="coerce"),
            "lon": pd.to_numeric(raw["lon"].str.strip(), errors="coerce"),
            "accuracy": (
                pd.to_numeric(raw["accuracy"].str.strip().replace("", np.nan), errors="coerce")
                if "accuracy" in raw.columns
                else pd.Series(np.nan, index=raw.index)
            ),
            "_line": raw["_line"],
        }
    )
    accuracy_given = (
        raw["accuracy"].str.strip() != ""
        if "accuracy" in raw.columns
        else pd.Series(False, index=raw.index)
    )
    _first_failure(
        raw,
        [
            (frame["id"] == "", "missing device id"),
            (frame["timestamp"].isna(), "unparseable timestamp '{timestamp}'"),
            (frame["lat"].isna(), "unparseable latitude '{lat}'"),
            (frame["lon"].isna(), "unparseable longitude '{lon}'"),
            (
                ~frame["lat"].between(-90.0, 90.0) & frame["lat"].notna(),
                "latitude {lat} out of range",
            ),
            (
                ~frame["lon"].between(-180.0, 180.0) & frame["lon"].notna(),
                "longitude {lon} out of range",
            ),
            (
                accuracy_given & ~(frame["accuracy"] >= 0),
                "invalid accuracy '{accuracy}'",
            ),
        ],
    )

    value_columns = ["id", "timestamp", "lat", "lon", "accuracy"]
    n_rows = len(frame)
    frame = frame.drop_duplicates(subset=value_columns, keep="first")
    n_exact = n_rows - len(frame)
    if n_exact:
        logger.info(f"dropped {n_exact} exact duplicate fix(es)")
    conflicting = frame.duplicated(subset=["id", "timestamp"], keep="first")
    if conflicting.any():
        lines = frame.loc[conflicting, "_line"].tolist()
        logger.warning(
            f"{len(lines)} fix(es) repeat an (id, timestamp) with different values and were "
            f"dropped, first at line {lines[0]}"
        )
        frame = frame.loc[~conflicting]
    return frame.sort_values(["id", "timestamp"], kind="stable").reset_index(drop=True)


def parse_gps_csv(source: Union[str, Path, TextIO]) -> List[Trajectory]:
    """One time-ordered trajectory per device id, devices sorted by id."""
    frame = parse_gps_frame(source)
    trajectories = []
    for device_id, group in frame.groupby("id", sort=True):
        fixes = [
            GpsFix(
                device_id=str(device_id),
                timestamp=row.timestamp,
                lat=float(row.lat),
                lon=float(row.lon),
                accuracy=None if pd.isna(row.accuracy) else float(row.accuracy),
            )
            for row in group.itertuples(index=False)
        ]
        trajectories.append(Trajectory(device_id=str(device_id), fixes=tuple(fixes)))
    logger.info(f"parsed {len(frame)} fixes from {len(trajectories)} device(s)")
    return trajectories


def project_coordinates(
    latitudes: np.ndarray, longitudes: np.ndarray, ref: ProjectionReference
) -> np.ndarray:
    """Local equirectangular projection to meters east/north of ``ref``."""
    lat = np.asarray(latitudes, dtype=float)
    lon = np.asarray(longitudes, dtype=float)
    scale = math.pi / 180.0 * EARTH_RADIUS_M
    x = (lon - ref.lon0) * scale * math.cos(math.radians(ref.lat0))
    y = (lat - ref.lat0) * scale
    return np.column_stack([x, y])


def project(trajectory: Trajectory, ref: Optional[ProjectionReference] = None) -> np.ndarray:
    """Planar points of the trajectory in fix order; time is dropped."""
    ref = ref or ProjectionReference.centroid_of(trajectory)
    return project_coordinates(trajectory.latitudes, trajectory.longitudes, ref)


def clip_bbox(points: np.ndarray, bbox: BoundingBox) -> np.ndarray:
    """Points inside ``bbox`` (boundary included), in their original order."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    inside = bbox.contains(points)
    dropped = int((~inside).sum())
    if dropped:
        logger.warning(f"clipping to {bbox} dropped {dropped} of {len(points)} point(s)")
    return points[inside]


def haversine_distance(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlambda = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlambda / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def read_points_csv(source: Union[str, Path, TextIO]) -> np.ndarray:
    """Planar points from a CSV with ``x`` and ``y`` columns."""
    try:
        frame = pd.read_csv(source)
    except pd.errors.EmptyDataError:
        raise ValueError("points file is empty") from None
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    if "x" not in frame.columns or "y" not in frame.columns:
        raise ValueError(f"points file needs x and y columns, found {list(frame.columns)}")
    points = frame[["x", "y"]].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(points).all(axis=1)
    if bad.any():
        raise ValueError(
            f"line {int(np.argmax(bad)) + _FIRST_DATA_LINE}: non-numeric or non-finite coordinate"
        )
    return points


def is_gps_csv(path: Union[str, Path]) -> bool:
    """Whether the header of the file at ``path`` names latitude and longitude columns."""
    with open(path) as f:
        header = f.readline()
    columns = {c.strip().lower() for c in header.split(",")}
    return {"lat", "lon"} <= columns
