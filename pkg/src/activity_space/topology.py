"""Connected components of level sets and the three summary curves.

The persistence computation sweeps the cells of a ranking field from the highest ranking down,
tracking components with a union-find forest. When two components meet, the one born at the
higher level survives and the other dies at the current level.
"""
import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from activity_space.core.grid import CellIndex, CellSet, ScalarField
from activity_space.ranking import level_set

logger = logging.getLogger(__name__)


class Connectivity(IntEnum):
    FOUR = 4
    EIGHT = 8

    @property
    def forward_offsets(self) -> List[Tuple[int, int]]:
        """Half of the neighbourhood as (drow, dcol); every adjacent pair is visited once."""
        if self is Connectivity.FOUR:
            return [(0, 1), (1, 0)]
        return [(0, 1), (1, 0), (1, 1), (1, -1)]

    @property
    def offsets(self) -> List[Tuple[int, int]]:
        forward = self.forward_offsets
        return forward + [(-dr, -dc) for dr, dc in forward]

    @classmethod
    def parse(cls, value: Union[int, str, "Connectivity"]) -> "Connectivity":
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ValueError(f"connectivity must be 4 or 8, got {value!r}") from None


class CurveKind(str, Enum):
    MASS_VOLUME = "mass-volume"
    BETTI = "betti"
    PERSISTENCE = "persistence"


class UnionFind:
    """Disjoint sets over 0..size-1 with path halving and union by rank."""

    def __init__(self, size: int) -> None:
        self._parent = list(range(size))
        self._rank = [0] * size

    def find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        """Merge the sets of ``a`` and ``b`` and return the root of the merged set."""
        pa = self.find(a)
        pb = self.find(b)
        if pa == pb:
            return pa
        rank = self._rank
        parent = self._parent
        if rank[pa] < rank[pb]:
            parent[pa] = pb
            return pb
        parent[pb] = pa
        if rank[pa] == rank[pb]:
            rank[pa] += 1
        return pa


@dataclass(frozen=True)
class PersistencePair:
    """A component of the superlevel filtration, in ranking levels: born when the threshold
    drops to ``birth_alpha`` and merged into an elder component at ``death_alpha``."""

    birth_alpha: float
    death_alpha: float
    birth_cell: CellIndex

    def __post_init__(self):
        if not 0.0 <= self.death_alpha <= self.birth_alpha <= 1.0:
            raise ValueError(
                f"invalid persistence pair: require 0 <= death ({self.death_alpha}) <= "
                f"birth ({self.birth_alpha}) <= 1"
            )

    @property
    def persistence(self) -> float:
        return self.birth_alpha - self.death_alpha


@dataclass(frozen=True, eq=False)
class SummaryCurve:
    levels: np.ndarray
    values: np.ndarray
    kind: CurveKind

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if levels.shape != values.shape:
            raise ValueError(
                f"curve has {len(levels)} levels but {len(values)} values ({self.kind.value})"
            )
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.levels)

    def max(self) -> float:
        return float(self.values.max()) if len(self.values) else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"level": self.levels, "value": self.values})


def default_levels(step: float = 0.01) -> np.ndarray:
    """Levels ``step, 2*step, ...`` strictly below 1.

    >>> default_levels(0.25).tolist()
    [0.25, 0.5, 0.75]
    """
    if not 0 < step <= 0.5:
        raise ValueError(f"level step must lie in (0, 0.5], got {step}")
    count = int(round(1.0 / step))
    levels = np.round(np.arange(1, count + 1) * step, 12)
    return levels[levels < 1.0]


def check_levels(levels: Iterable[float], name: str = "levels") -> np.ndarray:
    array = np.asarray(list(levels), dtype=float)
    if array.ndim != 1 or len(array) == 0:
        raise ValueError(f"{name} must be a non-empty sequence")
    if not np.isfinite(array).all() or array.min() < 0.0 or array.max() > 1.0:
        raise ValueError(f"{name} must lie in [0, 1]")
    if (np.diff(array) <= 0).any():
        raise ValueError(f"{name} must be strictly increasing")
    return array


def _adjacent_pairs(mask: np.ndarray, conn: Connectivity) -> Iterable[Tuple[int, int]]:
    """Flat indices of adjacent member cells, each unordered pair once."""
    nrows, ncols = mask.shape
    flat = np.arange(mask.size).reshape(mask.shape)
    for dr, dc in conn.forward_offsets:
        r0, r1 = 0, nrows - dr
        c0, c1 = max(0, -dc), ncols - max(0, dc)
        if r1 <= r0 or c1 <= c0:
            continue
        here = mask[r0:r1, c0:c1]
        there = mask[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
        both = here & there
        yield from zip(
            flat[r0:r1, c0:c1][both].tolist(),
            flat[r0 + dr : r1 + dr, c0 + dc : c1 + dc][both].tolist(),
        )


def connected_components(
    cells: CellSet, conn: Union[Connectivity, int] = Connectivity.EIGHT
) -> Tuple[int, np.ndarray]:
    """Label the member cells of ``cells``.

    Returns the number of components and an integer array shaped like the grid holding the
    component label (numbered in row-major order of first appearance) of every member cell and
    -1 elsewhere.
    """
    conn = Connectivity.parse(conn)
    mask = cells.membership
    labels = np.full(mask.shape, -1, dtype=np.int64)
    members = np.flatnonzero(mask)
    if len(members) == 0:
        return 0, labels

    uf = UnionFind(mask.size)
    for a, b in _adjacent_pairs(mask, conn):
        uf.union(a, b)

    roots = np.fromiter((uf.find(int(i)) for i in members), dtype=np.int64, count=len(members))
    _, first_seen, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # unique sorts by root id; renumber by first appearance instead
    rank_of_unique = np.argsort(np.argsort(first_seen))
    labels.reshape(-1)[members] = rank_of_unique[inverse.reshape(-1)]
    return len(first_seen), labels


def mass_volume_curve(rank_field: ScalarField, levels: Sequence[float]) -> SummaryCurve:
    levels_array = check_levels(levels)
    values = [level_set(rank_field, gamma).area() for gamma in levels_array]
    return SummaryCurve(levels_array, np.asarray(values), CurveKind.MASS_VOLUME)


def betti_curve(
    rank_field: ScalarField,
    levels: Sequence[float],
    conn: Union[Connectivity, int] = Connectivity.EIGHT,
    show_progress_bar: bool = False,
) -> SummaryCurve:
    levels_array = check_levels(levels)
    values = [
        connected_components(level_set(rank_field, gamma), conn)[0]
        for gamma in tqdm(levels_array, desc="betti", disable=not show_progress_bar)
    ]
    return SummaryCurve(levels_array, np.asarray(values), CurveKind.BETTI)


@dataclass
class _Component:
    birth_alpha: float
    birth_flat: int

    def seniority(self) -> Tuple[float, int]:
        # smaller sorts as elder: born higher, then earlier in row-major order
        return -self.birth_alpha, self.birth_flat


def persistence_pairs(
    rank_field: ScalarField, conn: Union[Connectivity, int] = Connectivity.EIGHT
) -> List[PersistencePair]:
    """Birth/death pairs of the superlevel filtration of ``rank_field``.

    Cells are processed in batches of equal ranking (row-major within a batch, cells with
    ranking 0 never). A batch cell with no neighbour from an earlier batch is born first, then
    the batch is united with its processed neighbours. Components born and merged within the
    same batch have persistence 0 and are not reported. Components still alive at the end die
    at 0. Pairs are sorted by decreasing persistence, then decreasing birth, then birth cell.
    """
    conn = Connectivity.parse(conn)
    grid = rank_field.grid
    nrows, ncols = grid.shape
    alpha = rank_field.values.reshape(-1)
    positive = np.flatnonzero(alpha > 0)
    order = positive[np.lexsort((positive, -alpha[positive]))]

    uf = UnionFind(alpha.size)
    processed = np.zeros(alpha.size, dtype=bool)
    components: Dict[int, _Component] = {}
    pairs: List[PersistencePair] = []
    offsets = conn.offsets

    def neighbours(flat: int) -> Iterable[int]:
        row, col = divmod(flat, ncols)
        for dr, dc in offsets:
            r, c = row + dr, col + dc
            if 0 <= r < nrows and 0 <= c < ncols:
                yield r * ncols + c

    def merge(a: int, b: int, level: float) -> None:
        ra, rb = uf.find(a), uf.find(b)
        if ra == rb:
            return
        ca, cb = components.pop(ra, None), components.pop(rb, None)
        survivor: Optional[_Component]
        if ca is None or cb is None:
            survivor = ca if ca is not None else cb
        else:
            survivor, younger = sorted((ca, cb), key=_Component.seniority)
            if younger.birth_alpha > level:
                pairs.append(
                    PersistencePair(
                        birth_alpha=younger.birth_alpha,
                        death_alpha=level,
                        birth_cell=grid.cell_of_flat(younger.birth_flat),
                    )
                )
        root = uf.union(ra, rb)
        if survivor is not None:
            components[root] = survivor

    start = 0
    while start < len(order):
        level = alpha[order[start]]
        stop = start
        while stop < len(order) and alpha[order[stop]] == level:
            stop += 1
        batch = order[start:stop].tolist()

        for flat in batch:
            if not any(processed[nb] for nb in neighbours(flat)):
                components[flat] = _Component(float(level), flat)
        processed[batch] = True
        for flat in batch:
            for nb in neighbours(flat):
                if processed[nb]:
                    merge(flat, nb, float(level))
        start = stop

    for component in components.values():
        pairs.append(
            PersistencePair(
                birth_alpha=component.birth_alpha,
                death_alpha=0.0,
                birth_cell=grid.cell_of_flat(component.birth_flat),
            )
        )
    pairs.sort(
        key=lambda p: (-p.persistence, -p.birth_alpha, p.birth_cell.row, p.birth_cell.col)
    )
    logger.debug(f"persistence sweep over {len(order)} cells produced {len(pairs)} pairs")
    return pairs


def persistence_curve(
    pairs: Sequence[PersistencePair], thresholds: Sequence[float]
) -> SummaryCurve:
    thresholds_array = check_levels(thresholds, name="thresholds")
    persistences = np.sort(np.asarray([p.persistence for p in pairs], dtype=float))
    below = np.searchsorted(persistences, thresholds_array, side="left")
    return SummaryCurve(thresholds_array, len(persistences) - below, CurveKind.PERSISTENCE)


def betti_from_pairs(pairs: Sequence[PersistencePair], levels: Sequence[float]) -> np.ndarray:
    """Number of components alive in each level set, read off the pairs: born at or above
    ``1 - gamma`` and not yet dead there."""
    levels_array = check_levels(levels)
    births = np.asarray([p.birth_alpha for p in pairs], dtype=float)
    deaths = np.asarray([p.death_alpha for p in pairs], dtype=float)
    thresholds = 1.0 - levels_array
    alive = (births[None, :] >= thresholds[:, None]) & (thresholds[:, None] > deaths[None, :])
    return alive.sum(axis=1)
