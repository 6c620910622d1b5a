"""Raster geometry shared by every stage of the analysis.

A :class:`RasterGrid` partitions a rectangle into square cells of equal area. Values that live
on the grid (densities, rankings, level-set masks) are numpy arrays of shape
``(nrows, ncols)``; row 0 is the southernmost row and column 0 the westernmost column, and
the flattened row-major order of these arrays is the canonical cell order.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

NODATA_VALUE = -9999
# relative excess of extent/cell_size that still counts as an exact multiple
_CELL_COUNT_SLACK = 1e-9


class OutsideExtentError(ValueError):
    pass


@dataclass(frozen=True)
class BoundingBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        values = (self.xmin, self.ymin, self.xmax, self.ymax)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"bounding box coordinates must be finite, got {values}")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"degenerate bounding box: require xmin < xmax and ymin < ymax, got {values}"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def pad(self, margin: float) -> "BoundingBox":
        if margin < 0:
            raise ValueError(f"padding margin must be non-negative, got {margin}")
        return BoundingBox(
            self.xmin - margin, self.ymin - margin, self.xmax + margin, self.ymax + margin
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Inclusive containment mask for an array of shape (n, 2)."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return (
            (points[:, 0] >= self.xmin)
            & (points[:, 0] <= self.xmax)
            & (points[:, 1] >= self.ymin)
            & (points[:, 1] <= self.ymax)
        )

    @classmethod
    def from_points(cls, points: np.ndarray) -> "BoundingBox":
        """Tight box around the points; a zero extent along an axis is widened by 1 unit
        (0.5 on each side) so that single points and collinear samples still yield a valid
        box."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(points) == 0:
            raise ValueError("cannot compute the bounding box of an empty point set")
        xmin, ymin = points.min(axis=0)
        xmax, ymax = points.max(axis=0)
        if xmin == xmax:
            xmin, xmax = xmin - 0.5, xmax + 0.5
        if ymin == ymax:
            ymin, ymax = ymin - 0.5, ymax + 0.5
        return cls(float(xmin), float(ymin), float(xmax), float(ymax))

    @classmethod
    def parse(cls, text: str) -> "BoundingBox":
        """Parse ``"xmin,ymin,xmax,ymax"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected xmin,ymin,xmax,ymax but got '{text}'")
        try:
            values = [float(p) for p in parts]
        except ValueError as e:
            raise ValueError(f"bounding box '{text}' contains a non-numeric value") from e
        return cls(*values)


class CellIndex(NamedTuple):
    row: int
    col: int


def _cell_count(length: float, cell_size: float) -> int:
    ratio = length / cell_size
    count = math.floor(ratio)
    if ratio - count > _CELL_COUNT_SLACK * max(ratio, 1.0):
        count += 1
    return max(count, 1)


@dataclass(frozen=True)
class RasterGrid:
    """Square-cell lattice over ``bbox``.

    ``bbox.xmin``/``bbox.ymin`` are the lower-left corner of cell (0, 0). Aligned grids (see
    :func:`make_grid`) carry the lattice index of their first cell center in ``origin_col`` and
    ``origin_row``; their cell centers are then exact multiples of ``cell_size``.
    """

    bbox: BoundingBox
    cell_size: float
    ncols: int
    nrows: int
    origin_col: Optional[int] = None
    origin_row: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.cell_size) and self.cell_size > 0):
            raise ValueError(f"cell_size must be positive and finite, got {self.cell_size}")
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError(
                f"grid needs at least one row and column, got {self.nrows}x{self.ncols}"
            )
        if (self.origin_col is None) != (self.origin_row is None):
            raise ValueError("origin_col and origin_row must be given together")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nrows, self.ncols

    @property
    def n_cells(self) -> int:
        return self.nrows * self.ncols

    @property
    def cell_area(self) -> float:
        return self.cell_size * self.cell_size

    @property
    def total_area(self) -> float:
        return self.n_cells * self.cell_area

    @property
    def is_aligned(self) -> bool:
        return self.origin_col is not None

    @property
    def extent(self) -> BoundingBox:
        """Area covered by the cells; may overhang ``bbox`` by less than one cell."""
        return BoundingBox(
            self.bbox.xmin,
            self.bbox.ymin,
            max(self.bbox.xmin + self.ncols * self.cell_size, self.bbox.xmax),
            max(self.bbox.ymin + self.nrows * self.cell_size, self.bbox.ymax),
        )

    def column_edges(self) -> np.ndarray:
        return self.bbox.xmin + np.arange(self.ncols + 1) * self.cell_size

    def row_edges(self) -> np.ndarray:
        return self.bbox.ymin + np.arange(self.nrows + 1) * self.cell_size

    def x_centers(self) -> np.ndarray:
        cols = np.arange(self.ncols)
        if self.origin_col is not None:
            return (self.origin_col + cols) * self.cell_size
        return self.bbox.xmin + (cols + 0.5) * self.cell_size

    def y_centers(self) -> np.ndarray:
        rows = np.arange(self.nrows)
        if self.origin_row is not None:
            return (self.origin_row + rows) * self.cell_size
        return self.bbox.ymin + (rows + 0.5) * self.cell_size

    def centers(self) -> np.ndarray:
        """All cell centers as an array of shape (n_cells, 2) in row-major order."""
        xx, yy = np.meshgrid(self.x_centers(), self.y_centers())
        return np.column_stack([xx.ravel(), yy.ravel()])

    def check_index(self, idx: Tuple[int, int]) -> CellIndex:
        row, col = idx
        if not (0 <= row < self.nrows and 0 <= col < self.ncols):
            raise IndexError(
                f"cell index {tuple(idx)} is outside a {self.nrows}x{self.ncols} grid"
            )
        return CellIndex(int(row), int(col))

    def cell_center(self, idx: Tuple[int, int]) -> Tuple[float, float]:
        row, col = self.check_index(idx)
        return float(self.x_centers()[col]), float(self.y_centers()[row])

    def flat_index(self, idx: Tuple[int, int]) -> int:
        row, col = self.check_index(idx)
        return row * self.ncols + col

    def cell_of_flat(self, flat: int) -> CellIndex:
        if not 0 <= flat < self.n_cells:
            raise IndexError(f"flat index {flat} is outside a grid of {self.n_cells} cells")
        return CellIndex(*divmod(int(flat), self.ncols))

    def _axis_index(self, values: np.ndarray, axis: int) -> np.ndarray:
        if axis == 0:
            origin, start, count = self.origin_col, self.bbox.xmin, self.ncols
        else:
            origin, start, count = self.origin_row, self.bbox.ymin, self.nrows
        if origin is not None:
            raw = np.floor(values / self.cell_size + 0.5) - origin
        else:
            raw = np.floor((values - start) / self.cell_size)
        # the extent maximum belongs to the last cell
        return np.clip(raw, 0, count - 1).astype(np.int64)

    def locate_points(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorised :meth:`locate` returning ``(rows, cols)``."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        inside = self.extent.contains(points)
        if not inside.all():
            first = points[np.argmin(inside)]
            raise OutsideExtentError(
                f"{int((~inside).sum())} point(s) outside the grid extent {self.extent}, "
                f"first: ({first[0]}, {first[1]})"
            )
        return self._axis_index(points[:, 1], axis=1), self._axis_index(points[:, 0], axis=0)

    def locate(self, point: Tuple[float, float]) -> CellIndex:
        """Cell containing ``point``. Points on a shared edge go to the higher-index cell."""
        rows, cols = self.locate_points(np.asarray([point], dtype=float))
        return CellIndex(int(rows[0]), int(cols[0]))


def make_grid(bbox: BoundingBox, cell_size: float, align: bool = False) -> RasterGrid:
    """Smallest grid of ``cell_size`` cells covering ``bbox``.

    With ``align=True`` the lower-left corner is snapped outward to ``(k - 0.5) * cell_size`` so
    that every cell center is an integer multiple of ``cell_size``.

    >>> grid = make_grid(BoundingBox(0, 0, 2.5, 2), 1)
    >>> grid.ncols, grid.nrows
    (3, 2)
    """
    if not (math.isfinite(cell_size) and cell_size > 0):
        raise ValueError(f"cell_size must be positive and finite, got {cell_size}")
    if not align:
        return RasterGrid(
            bbox=bbox,
            cell_size=float(cell_size),
            ncols=_cell_count(bbox.width, cell_size),
            nrows=_cell_count(bbox.height, cell_size),
        )

    origin_col = math.floor(bbox.xmin / cell_size + 0.5)
    if (origin_col - 0.5) * cell_size > bbox.xmin:
        origin_col -= 1
    origin_row = math.floor(bbox.ymin / cell_size + 0.5)
    if (origin_row - 0.5) * cell_size > bbox.ymin:
        origin_row -= 1
    snapped = BoundingBox(
        (origin_col - 0.5) * cell_size, (origin_row - 0.5) * cell_size, bbox.xmax, bbox.ymax
    )
    return RasterGrid(
        bbox=snapped,
        cell_size=float(cell_size),
        ncols=_cell_count(snapped.width, cell_size),
        nrows=_cell_count(snapped.height, cell_size),
        origin_col=origin_col,
        origin_row=origin_row,
    )


def _frozen_array(values: np.ndarray, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite value per cell, stored with shape ``(nrows, ncols)``."""

    grid: RasterGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size != self.grid.n_cells:
                raise ValueError(
                    f"field has {values.size} values but the grid has {self.grid.n_cells} cells"
                )
            values = values.reshape(self.grid.shape)
        if not np.isfinite(values).all():
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen_array(values, float))

    def __getitem__(self, idx: Tuple[int, int]) -> float:
        row, col = self.grid.check_index(idx)
        return float(self.values[row, col])

    def max(self) -> float:
        return float(self.values.max())

    def argmax(self) -> CellIndex:
        """Row-major first cell holding the maximum."""
        return self.grid.cell_of_flat(int(np.argmax(self.values)))

    def is_non_negative(self) -> bool:
        return bool((self.values >= 0).all())


@dataclass(frozen=True, eq=False)
class CellSet:
    grid: RasterGrid
    membership: np.ndarray

    def __post_init__(self):
        membership = np.asarray(self.membership)
        if membership.size != self.grid.n_cells:
            raise ValueError(
                f"membership has {membership.size} entries but the grid has "
                f"{self.grid.n_cells} cells"
            )
        object.__setattr__(
            self, "membership", _frozen_array(membership.reshape(self.grid.shape), bool)
        )

    @classmethod
    def empty(cls, grid: RasterGrid) -> "CellSet":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: RasterGrid) -> "CellSet":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def from_cells(cls, grid: RasterGrid, cells: Iterable[Tuple[int, int]]) -> "CellSet":
        membership = np.zeros(grid.shape, dtype=bool)
        for idx in cells:
            row, col = grid.check_index(idx)
            membership[row, col] = True
        return cls(grid, membership)

    def _check_same_grid(self, other: "CellSet") -> None:
        if not isinstance(other, CellSet):
            raise TypeError(f"expected a CellSet, got {type(other).__name__}")
        if other.grid != self.grid:
            raise ValueError("cell sets live on different grids")

    def __or__(self, other: "CellSet") -> "CellSet":
        self._check_same_grid(other)
        return CellSet(self.grid, self.membership | other.membership)

    def __and__(self, other: "CellSet") -> "CellSet":
        self._check_same_grid(other)
        return CellSet(self.grid, self.membership & other.membership)

    def __sub__(self, other: "CellSet") -> "CellSet":
        self._check_same_grid(other)
        return CellSet(self.grid, self.membership & ~other.membership)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.membership, other.membership))

    def __hash__(self):
        return hash((self.grid, self.membership.tobytes()))

    def __contains__(self, idx: Tuple[int, int]) -> bool:
        row, col = self.grid.check_index(idx)
        return bool(self.membership[row, col])

    def __iter__(self) -> Iterator[CellIndex]:
        for row, col in zip(*np.nonzero(self.membership)):
            yield CellIndex(int(row), int(col))

    def __len__(self) -> int:
        return self.count()

    def count(self) -> int:
        return int(self.membership.sum())

    def area(self) -> float:
        return self.count() * self.grid.cell_area

    def issubset(self, other: "CellSet") -> bool:
        self._check_same_grid(other)
        return bool((self.membership <= other.membership).all())

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """Whether each point falls in a member cell; points outside the extent are not."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        result = np.zeros(len(points), dtype=bool)
        inside = self.grid.extent.contains(points)
        if inside.any():
            rows, cols = self.grid.locate_points(points[inside])
            result[inside] = self.membership[rows, cols]
        return result

    def as_field(self) -> ScalarField:
        return ScalarField(self.grid, self.membership.astype(float))


def _format_coordinate(value: float) -> str:
    return f"{value:.12g}"


def to_esri_ascii(values: Union[ScalarField, CellSet]) -> str:
    """Render a field (or a 0/1 mask) as an ESRI ASCII grid, northern row first."""
    field_ = values.as_field() if isinstance(values, CellSet) else values
    grid = field_.grid
    lines: List[str] = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {_format_coordinate(grid.bbox.xmin)}",
        f"yllcorner {_format_coordinate(grid.bbox.ymin)}",
        f"cellsize {_format_coordinate(grid.cell_size)}",
        f"NODATA_value {NODATA_VALUE}",
    ]
    for row in field_.values[::-1]:
        lines.append(" ".join(f"{v:.6g}" for v in row))
    return "\n".join(lines) + "\n"


def write_esri_ascii(values: Union[ScalarField, CellSet], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(to_esri_ascii(values))
    logger.debug(f"wrote ESRI ASCII grid to {path}")
    return path


_ESRI_HEADER = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def read_esri_ascii(path: Union[str, Path]) -> ScalarField:
    """Parse a grid written by :func:`write_esri_ascii`. The returned grid is unaligned."""
    path = Path(path)
    with open(path) as f:
        header = {}
        for expected in _ESRI_HEADER:
            parts = f.readline().split()
            if len(parts) != 2 or parts[0].lower() != expected:
                raise ValueError(f"{path}: expected header entry '{expected}', got {parts}")
            header[expected] = parts[1]
        values = np.loadtxt(f, dtype=float, ndmin=2)
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    if values.shape != (nrows, ncols):
        raise ValueError(f"{path}: body has shape {values.shape}, header says {(nrows, ncols)}")
    cell_size = float(header["cellsize"])
    xmin, ymin = float(header["xllcorner"]), float(header["yllcorner"])
    grid = RasterGrid(
        bbox=BoundingBox(xmin, ymin, xmin + ncols * cell_size, ymin + nrows * cell_size),
        cell_size=cell_size,
        ncols=ncols,
        nrows=nrows,
    )
    return ScalarField(grid, values[::-1])
