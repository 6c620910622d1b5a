"""Kernel density estimation on planar point sets.

Densities are ``p(x) = C / (n h^2) * sum_i w(|x - X_i|^2 / h^2)`` with a compactly supported
kernel profile ``w``. Every evaluation path (single query, bucketed grid, per-sample) adds the
contributing weights sequentially in ascending sample index, so bucketed and brute-force results
are bit-identical.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from activity_space.core.grid import RasterGrid, ScalarField
from activity_space.core.registrable import Registrable

logger = logging.getLogger(__name__)

# rows per evaluation block; bounds the (queries x candidates) weight matrix
QUERY_CHUNK_SIZE = 256
# bucket width is h widened by this factor so that rounding in the key computation never pushes
# a point closer than h outside the 3x3 neighbourhood
_BUCKET_WIDENING = 1e-6


class EmptyPointSetError(ValueError):
    pass


def as_point_array(points) -> np.ndarray:
    """Validate and convert to a float array of shape (n, 2) with n >= 1."""
    array = np.asarray(points, dtype=float)
    if array.size == 0:
        raise EmptyPointSetError("density estimation needs at least one point")
    if array.ndim != 2 or array.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {array.shape}")
    if not np.isfinite(array).all():
        raise ValueError("point coordinates must be finite")
    return array


def check_bandwidth(h: float) -> float:
    try:
        value = float(h)
    except (TypeError, ValueError):
        raise ValueError(f"bandwidth must be a number, got {h!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"bandwidth must be positive and finite, got {h}")
    return value


class Kernel(Registrable):
    """Radially symmetric kernel supported on the unit disc.

    Subclasses provide the profile as a function of the squared scaled distance and the constant
    that normalises it to a probability density in the plane.
    """

    normalization: float

    def weights(self, squared_distances: np.ndarray, squared_bandwidth: float) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        u = np.asarray(u, dtype=float)
        values = self.normalization * self.weights(u * u, 1.0)
        return float(values) if values.ndim == 0 else values


@Kernel.register("quartic")
class QuarticKernel(Kernel):
    """Biweight kernel ``(3/pi) (1 - u^2)^2`` for ``|u| < 1``."""

    normalization = 3.0 / math.pi

    def weights(self, squared_distances: np.ndarray, squared_bandwidth: float) -> np.ndarray:
        inside = squared_distances < squared_bandwidth
        t = 1.0 - squared_distances / squared_bandwidth
        return np.where(inside, t * t, 0.0)


def resolve_kernel(kernel: Union[str, Kernel]) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    return Kernel.by_name(kernel)()


def quartic_kernel(u: float) -> float:
    """
    >>> round(quartic_kernel(0.5), 6)
    0.537148
    """
    return QuarticKernel()(u)


@dataclass(frozen=True, eq=False)
class SpatialBuckets:
    """Square buckets of side (slightly more than) ``h`` holding ascending point indices.

    A disc of radius ``h`` around any query only touches the 3x3 bucket neighbourhood of the
    query's own bucket.
    """

    width: float
    origin: Tuple[float, float]
    buckets: Dict[Tuple[int, int], np.ndarray]

    @classmethod
    def build(cls, points: np.ndarray, h: float) -> "SpatialBuckets":
        points = as_point_array(points)
        width = check_bandwidth(h) * (1.0 + _BUCKET_WIDENING)
        origin = (float(points[:, 0].min()), float(points[:, 1].min()))
        keys = np.floor((points - np.asarray(origin)) / width).astype(np.int64)
        # stable by point index within each bucket
        order = np.lexsort((np.arange(len(points)), keys[:, 1], keys[:, 0]))
        sorted_keys = keys[order]
        changes = np.nonzero(np.any(np.diff(sorted_keys, axis=0) != 0, axis=1))[0] + 1
        starts = np.concatenate([[0], changes])
        ends = np.append(changes, len(points))
        buckets = {
            (int(sorted_keys[s, 0]), int(sorted_keys[s, 1])): order[s:e]
            for s, e in zip(starts, ends)
        }
        return cls(width=width, origin=origin, buckets=buckets)

    def keys(self, queries: np.ndarray) -> np.ndarray:
        return np.floor((queries - np.asarray(self.origin)) / self.width).astype(np.int64)

    def neighbourhood(self, key: Tuple[int, int]) -> np.ndarray:
        kx, ky = key
        parts = [
            self.buckets[(kx + dx, ky + dy)]
            for dx in (-1, 0, 1)
            for dy in (-1, 0, 1)
            if (kx + dx, ky + dy) in self.buckets
        ]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))


def _sequential_weight_sums(
    points: np.ndarray, queries: np.ndarray, h: float, kernel: Kernel
) -> np.ndarray:
    """Kernel weight sums of all ``points`` (in index order) at each query."""
    sums = np.zeros(len(queries), dtype=float)
    h2 = h * h
    for start in range(0, len(queries), QUERY_CHUNK_SIZE):
        block = queries[start : start + QUERY_CHUNK_SIZE]
        dx = block[:, 0:1] - points[None, :, 0]
        dy = block[:, 1:2] - points[None, :, 1]
        weights = kernel.weights(dx * dx + dy * dy, h2)
        # cumsum adds left to right, zeros leave partial sums unchanged
        sums[start : start + len(block)] = np.cumsum(weights, axis=1)[:, -1]
    return sums


def _bucketed_weight_sums(
    points: np.ndarray, queries: np.ndarray, h: float, kernel: Kernel
) -> np.ndarray:
    buckets = SpatialBuckets.build(points, h)
    sums = np.zeros(len(queries), dtype=float)
    query_keys = buckets.keys(queries)
    unique_keys, inverse = np.unique(query_keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(np.bincount(inverse, minlength=len(unique_keys)))])
    for group, key in enumerate(unique_keys):
        candidates = buckets.neighbourhood((int(key[0]), int(key[1])))
        if len(candidates) == 0:
            continue
        members = order[bounds[group] : bounds[group + 1]]
        sums[members] = _sequential_weight_sums(points[candidates], queries[members], h, kernel)
    return sums


def _normalize(sums: np.ndarray, n: int, h: float, kernel: Kernel) -> np.ndarray:
    return sums * (kernel.normalization / (n * h * h))


def evaluate_kde(
    points, query: Tuple[float, float], h: float, kernel: Union[str, Kernel] = "quartic"
) -> float:
    """Density estimate at a single query point by direct summation over all samples.

    >>> round(evaluate_kde([[0.0, 0.0]], (0.0, 0.0), 1.0), 6)
    0.95493
    """
    points = as_point_array(points)
    h = check_bandwidth(h)
    kernel = resolve_kernel(kernel)
    queries = np.asarray([query], dtype=float)
    sums = _sequential_weight_sums(points, queries, h, kernel)
    return float(_normalize(sums, len(points), h, kernel)[0])


def evaluate_kde_many(
    points, queries: np.ndarray, h: float, kernel: Union[str, Kernel] = "quartic"
) -> np.ndarray:
    """Bucketed density estimates at many query points."""
    points = as_point_array(points)
    h = check_bandwidth(h)
    kernel = resolve_kernel(kernel)
    queries = np.asarray(queries, dtype=float).reshape(-1, 2)
    sums = _bucketed_weight_sums(points, queries, h, kernel)
    return _normalize(sums, len(points), h, kernel)


def kde_field(
    points, grid: RasterGrid, h: float, kernel: Union[str, Kernel] = "quartic"
) -> ScalarField:
    """Density estimate at every cell center of ``grid``."""
    values = evaluate_kde_many(points, grid.centers(), h, kernel=kernel)
    logger.debug(f"evaluated density on {grid.nrows}x{grid.ncols} cells with h={h}")
    return ScalarField(grid, values.reshape(grid.shape))


def kde_at_samples(
    points, h: float, kernel: Union[str, Kernel] = "quartic", unique: bool = True
) -> np.ndarray:
    """Density estimate at each sample, the sample itself included.

    Coincident samples (for instance repeated fixes at an anchor) are evaluated once.
    """
    points = as_point_array(points)
    if not unique:
        return evaluate_kde_many(points, points, h, kernel=kernel)
    distinct, inverse = np.unique(points, axis=0, return_inverse=True)
    values = evaluate_kde_many(points, distinct, h, kernel=kernel)
    return values[inverse.reshape(-1)]
