"""Mixture model of GPS activity: anchor atoms, uniform road segments and uniform walk
rectangles.

``P = pi0 * P0 + pi1 * P1 + pi2 * P2`` where ``P0`` puts point masses on the anchors, ``P1`` is
uniform along each road segment and ``P2`` is uniform inside each rectangle. Everything the
benchmark needs (cell-set probabilities, dimensions, population rankings) is evaluated in closed
form from these pieces.
"""
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

from activity_space.core.grid import CellSet, RasterGrid

logger = logging.getLogger(__name__)

# volume of the unit ball in dimension s (point count, length, area)
BALL_VOLUME = {0: 1.0, 1: 2.0, 2: math.pi}
GEOMETRY_TOLERANCE = 1e-9
MASS_TOLERANCE = 1e-9
PAPER_MODEL_RESOURCE = "paper_model.json"


class ModelDocumentError(ValueError):
    pass


class Target(str, Enum):
    ANCHORS = "anchors"
    ANCHORS_AND_ROADS = "anchors+roads"


def _check_mass(mass: float, what: str) -> None:
    if not (math.isfinite(mass) and mass > 0):
        raise ValueError(f"{what} mass must be positive, got {mass}")


@dataclass(frozen=True)
class Atom:
    x: float
    y: float
    mass: float

    def __post_init__(self):
        _check_mass(self.mass, "atom")

    def distance_to(self, x: float, y: float) -> float:
        return math.hypot(x - self.x, y - self.y)


@dataclass(frozen=True)
class Segment:
    ax: float
    ay: float
    bx: float
    by: float
    mass: float

    def __post_init__(self):
        _check_mass(self.mass, "segment")
        if not self.length > 0:
            raise ValueError(
                f"segment ({self.ax}, {self.ay})-({self.bx}, {self.by}) has no length"
            )

    @property
    def length(self) -> float:
        return math.hypot(self.bx - self.ax, self.by - self.ay)

    @property
    def linear_density(self) -> float:
        return self.mass / self.length

    def point_at(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.column_stack(
            [self.ax + t * (self.bx - self.ax), self.ay + t * (self.by - self.ay)]
        )

    def distance_to(self, x: float, y: float) -> float:
        dx, dy = self.bx - self.ax, self.by - self.ay
        t = ((x - self.ax) * dx + (y - self.ay) * dy) / (dx * dx + dy * dy)
        t = min(1.0, max(0.0, t))
        return math.hypot(x - (self.ax + t * dx), y - (self.ay + t * dy))


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    mass: float

    def __post_init__(self):
        _check_mass(self.mass, "rectangle")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(
                f"rectangle [{self.xmin}, {self.xmax}]x[{self.ymin}, {self.ymax}] has no area"
            )

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def area_density(self) -> float:
        return self.mass / self.area

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def overlap_area(self, other: "Rect") -> float:
        width = min(self.xmax, other.xmax) - max(self.xmin, other.xmin)
        height = min(self.ymax, other.ymax) - max(self.ymin, other.ymin)
        return max(width, 0.0) * max(height, 0.0)


@dataclass(frozen=True)
class MixtureModel:
    pi: Tuple[float, float, float]
    atoms: Tuple[Atom, ...] = ()
    segments: Tuple[Segment, ...] = ()
    rects: Tuple[Rect, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pi", tuple(float(p) for p in self.pi))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "rects", tuple(self.rects))
        if len(self.pi) != 3:
            raise ValueError(f"expected three mixture weights, got {len(self.pi)}")
        if any(not math.isfinite(p) or p < 0 for p in self.pi):
            raise ValueError(f"mixture weights must be non-negative, got {self.pi}")
        if abs(sum(self.pi) - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"mixture weights must sum to 1, got {sum(self.pi)}")
        for name, weight, parts in (
            ("atoms", self.pi[0], self.atoms),
            ("segments", self.pi[1], self.segments),
            ("rects", self.pi[2], self.rects),
        ):
            if not parts:
                if weight > 0:
                    raise ValueError(f"component '{name}' has weight {weight} but no parts")
                continue
            total = sum(part.mass for part in parts)
            if abs(total - 1.0) > MASS_TOLERANCE:
                raise ValueError(f"masses of component '{name}' must sum to 1, got {total}")
        for i, first in enumerate(self.rects):
            for second in self.rects[i + 1 :]:
                if first.overlap_area(second) > 0:
                    raise ValueError(f"rectangles {first} and {second} overlap")

    @property
    def pi0(self) -> float:
        return self.pi[0]

    @property
    def pi1(self) -> float:
        return self.pi[1]

    @property
    def pi2(self) -> float:
        return self.pi[2]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pi": list(self.pi),
            "atoms": [{"x": a.x, "y": a.y, "mass": a.mass} for a in self.atoms],
            "segments": [
                {"ax": s.ax, "ay": s.ay, "bx": s.bx, "by": s.by, "mass": s.mass}
                for s in self.segments
            ],
            "rects": [
                {"xmin": r.xmin, "ymin": r.ymin, "xmax": r.xmax, "ymax": r.ymax, "mass": r.mass}
                for r in self.rects
            ],
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "MixtureModel":
        if not isinstance(document, dict):
            raise ModelDocumentError(f"model document must be a JSON object, got {type(document)}")
        try:
            return cls(
                pi=tuple(float(p) for p in document["pi"]),  # type: ignore[arg-type]
                atoms=tuple(
                    Atom(float(a["x"]), float(a["y"]), float(a["mass"]))
                    for a in document.get("atoms", [])
                ),
                segments=tuple(
                    Segment(
                        float(s["ax"]),
                        float(s["ay"]),
                        float(s["bx"]),
                        float(s["by"]),
                        float(s["mass"]),
                    )
                    for s in document.get("segments", [])
                ),
                rects=tuple(
                    Rect(
                        float(r["xmin"]),
                        float(r["ymin"]),
                        float(r["xmax"]),
                        float(r["ymax"]),
                        float(r["mass"]),
                    )
                    for r in document.get("rects", [])
                ),
            )
        except KeyError as e:
            raise ModelDocumentError(f"model document is missing the key {e}") from e
        except (TypeError, ValueError) as e:
            raise ModelDocumentError(f"invalid model document: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "MixtureModel":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelDocumentError(f"model document is not valid JSON: {e}") from e
        return cls.from_dict(document)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MixtureModel":
        return cls.from_json(Path(path).read_text())

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def paper_model() -> MixtureModel:
    """Three anchors (home, office, gym), the three roads between them and two walk areas.

    >>> model = paper_model()
    >>> model.pi
    (0.6, 0.3, 0.1)
    """
    text = resources.files("activity_space.data").joinpath(PAPER_MODEL_RESOURCE).read_text()
    return MixtureModel.from_json(text)


def load_model(path: Union[str, Path, None]) -> MixtureModel:
    """The model document at ``path``, or the bundled model when ``path`` is None."""
    return paper_model() if path is None else MixtureModel.load(path)


def _probabilities(parts: Sequence[Union[Atom, Segment, Rect]]) -> np.ndarray:
    masses = np.asarray([part.mass for part in parts], dtype=float)
    return masses / masses.sum()


def sample(model: MixtureModel, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. points.

    All component labels are drawn first, then the part within each component (anchors, roads,
    rectangles in that order) and finally the positions.
    """
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    if seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    rng = np.random.default_rng(seed)
    components = rng.choice(3, size=n, p=np.asarray(model.pi) / sum(model.pi))
    points = np.empty((n, 2), dtype=float)

    members = np.flatnonzero(components == 0)
    if len(members):
        which = rng.choice(len(model.atoms), size=len(members), p=_probabilities(model.atoms))
        coords = np.asarray([(a.x, a.y) for a in model.atoms], dtype=float)
        points[members] = coords[which]

    members = np.flatnonzero(components == 1)
    if len(members):
        which = rng.choice(
            len(model.segments), size=len(members), p=_probabilities(model.segments)
        )
        t = rng.random(len(members))
        starts = np.asarray([(s.ax, s.ay) for s in model.segments], dtype=float)
        ends = np.asarray([(s.bx, s.by) for s in model.segments], dtype=float)
        points[members] = starts[which] + t[:, None] * (ends[which] - starts[which])

    members = np.flatnonzero(components == 2)
    if len(members):
        which = rng.choice(len(model.rects), size=len(members), p=_probabilities(model.rects))
        u = rng.random((len(members), 2))
        lower = np.asarray([(r.xmin, r.ymin) for r in model.rects], dtype=float)
        upper = np.asarray([(r.xmax, r.ymax) for r in model.rects], dtype=float)
        points[members] = lower[which] + u * (upper[which] - lower[which])

    return points


def _atom_layer(model: MixtureModel, grid: RasterGrid) -> np.ndarray:
    layer = np.zeros(grid.shape, dtype=float)
    extent = grid.extent
    for atom in model.atoms:
        if extent.contains(np.asarray([[atom.x, atom.y]]))[0]:
            row, col = grid.locate((atom.x, atom.y))
            layer[row, col] += atom.mass
    return layer


def _segment_layer(model: MixtureModel, grid: RasterGrid) -> np.ndarray:
    layer = np.zeros(grid.shape, dtype=float)
    x_edges, y_edges = grid.column_edges(), grid.row_edges()
    extent = grid.extent
    for segment in model.segments:
        dx, dy = segment.bx - segment.ax, segment.by - segment.ay
        cuts = [np.asarray([0.0, 1.0])]
        if dx != 0:
            cuts.append((x_edges - segment.ax) / dx)
        if dy != 0:
            cuts.append((y_edges - segment.ay) / dy)
        t = np.unique(np.clip(np.concatenate(cuts), 0.0, 1.0))
        lengths = np.diff(t)
        keep = lengths > 0
        midpoints = segment.point_at((t[:-1] + t[1:])[keep] / 2)
        lengths = lengths[keep]
        inside = extent.contains(midpoints)
        if not inside.any():
            continue
        rows, cols = grid.locate_points(midpoints[inside])
        np.add.at(layer, (rows, cols), segment.mass * lengths[inside])
    return layer


def _rect_layer(model: MixtureModel, grid: RasterGrid) -> np.ndarray:
    layer = np.zeros(grid.shape, dtype=float)
    x_edges, y_edges = grid.column_edges(), grid.row_edges()
    for rect in model.rects:
        x_overlap = np.clip(
            np.minimum(x_edges[1:], rect.xmax) - np.maximum(x_edges[:-1], rect.xmin), 0.0, None
        )
        y_overlap = np.clip(
            np.minimum(y_edges[1:], rect.ymax) - np.maximum(y_edges[:-1], rect.ymin), 0.0, None
        )
        layer += rect.mass * np.outer(y_overlap, x_overlap) / rect.area
    return layer


@lru_cache(maxsize=32)
def cell_mass_layers(model: MixtureModel, grid: RasterGrid) -> np.ndarray:
    """Per-cell probabilities under ``P0``, ``P1`` and ``P2``, shape ``(3, nrows, ncols)``."""
    layers = np.stack(
        [_atom_layer(model, grid), _segment_layer(model, grid), _rect_layer(model, grid)]
    )
    layers.setflags(write=False)
    return layers


def component_measures(model: MixtureModel, cells: CellSet) -> Tuple[float, float, float]:
    """``(P0(cells), P1(cells), P2(cells))``."""
    layers = cell_mass_layers(model, cells.grid)
    masses = layers[:, cells.membership].sum(axis=1)
    return float(masses[0]), float(masses[1]), float(masses[2])


def true_measure(model: MixtureModel, cells: CellSet) -> float:
    m0, m1, m2 = component_measures(model, cells)
    return model.pi0 * m0 + model.pi1 * m1 + model.pi2 * m2


def symmetric_difference_error(
    model: MixtureModel, estimate: CellSet, target: Union[Target, str]
) -> float:
    """Probability of the symmetric difference between ``estimate`` and the target support:
    the anchors alone, or the anchors together with the roads."""
    target = Target(target)
    m0, m1, m2 = component_measures(model, estimate)
    missed_anchors = model.pi0 * (1.0 - m0)
    if target is Target.ANCHORS:
        return missed_anchors + model.pi1 * m1 + model.pi2 * m2
    return missed_anchors + model.pi1 * (1.0 - m1) + model.pi2 * m2


def atom_cells(model: MixtureModel, grid: RasterGrid) -> CellSet:
    return CellSet(grid, _atom_layer(model, grid) > 0)


def atom_mass_at(model: MixtureModel, x: float, y: float) -> float:
    return sum(a.mass for a in model.atoms if a.distance_to(x, y) <= GEOMETRY_TOLERANCE)


def linear_density_at(model: MixtureModel, x: float, y: float) -> float:
    return sum(
        s.linear_density for s in model.segments if s.distance_to(x, y) <= GEOMETRY_TOLERANCE
    )


def area_density_at(model: MixtureModel, x: float, y: float) -> float:
    return sum(r.area_density for r in model.rects if r.contains(x, y))


def dimension(model: MixtureModel, point: Tuple[float, float]) -> int:
    """0 on an anchor, 1 on a road away from the anchors, 2 anywhere else.

    >>> dimension(paper_model(), (1.0, 1.0))
    1
    """
    x, y = point
    if atom_mass_at(model, x, y) > 0:
        return 0
    if linear_density_at(model, x, y) > 0:
        return 1
    return 2


def hausdorff_density(model: MixtureModel, point: Tuple[float, float]) -> float:
    """Density of the point with respect to the measure of its own dimension."""
    x, y = point
    omega = dimension(model, point)
    if omega == 0:
        return model.pi0 * atom_mass_at(model, x, y)
    if omega == 1:
        return model.pi1 * linear_density_at(model, x, y)
    return model.pi2 * area_density_at(model, x, y)


def true_alpha(model: MixtureModel, point: Tuple[float, float]) -> float:
    """Probability that a random draw is ranked no higher than ``point``: lower dimension ranks
    higher, and within a dimension the higher density ranks higher.

    >>> round(true_alpha(paper_model(), (2.0, 0.0)), 6)
    0.52
    """
    x, y = point
    omega = dimension(model, point)
    if omega == 0:
        mass = atom_mass_at(model, x, y)
        below = sum(a.mass for a in model.atoms if a.mass <= mass)
        return model.pi1 + model.pi2 + model.pi0 * below
    if omega == 1:
        density = linear_density_at(model, x, y)
        below = sum(s.mass for s in model.segments if s.linear_density <= density)
        return model.pi2 + model.pi1 * below
    density = area_density_at(model, x, y)
    if density == 0:
        return 0.0
    return model.pi2 * sum(r.mass for r in model.rects if r.area_density <= density)


def true_alpha_many(model: MixtureModel, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.fromiter(
        (true_alpha(model, (float(x), float(y))) for x, y in points),
        dtype=float,
        count=len(points),
    )
