"""Point clouds, grid partitions with supplemental-boundary facets, and the
distance matrices fed to the Rips construction.

A facet is an interior wall of the partition seen from one region.  It joins
the region's vertex set as a single pseudo-vertex whose distance to a point is
the Euclidean distance from the point to the closed (D-1)-dimensional wall
rectangle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.spatial.distance import cdist


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise GeometryError(f"point cloud needs shape (n>=1, D>=1), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("point coordinates must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, indices) -> "PointCloud":
        return PointCloud(self.points[np.asarray(indices, dtype=int)])


@dataclass(frozen=True)
class HyperRect:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.atleast_1d(np.asarray(self.low, dtype=float))
        high = np.atleast_1d(np.asarray(self.high, dtype=float))
        if low.shape != high.shape or low.ndim != 1:
            raise GeometryError("low/high must be vectors of equal length")
        if np.any(low >= high):
            raise GeometryError(f"degenerate box: low={low}, high={high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.high - self.low

    def contains(self, p, atol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.low - atol) and np.all(p <= self.high + atol))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))


@dataclass(frozen=True)
class BoundaryFacet:
    """Axis-aligned interior wall of one region.

    ``extent`` covers the D-1 axes other than ``axis`` (in increasing axis
    order).  ``neighbor_id`` is the region on the other side of the wall and
    ``side`` is -1 for the region's low wall on that axis, +1 for its high wall.
    """

    region_id: int
    axis: int
    offset: float
    extent: HyperRect | None
    facet_id: int
    neighbor_id: int = -1
    side: int = 0

    def box(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """The wall as a degenerate box in R^dim."""
        lo = np.empty(dim)
        hi = np.empty(dim)
        others = [a for a in range(dim) if a != self.axis]
        lo[self.axis] = hi[self.axis] = self.offset
        if others:
            lo[others] = self.extent.low
            hi[others] = self.extent.high
        return lo, hi

    def wall_key(self) -> tuple[int, float]:
        return (self.axis, self.offset)


@dataclass(frozen=True)
class PartitionScheme:
    bbox: HyperRect
    per_axis_counts: tuple[int, ...]
    regions: tuple[HyperRect, ...]
    facets: tuple[tuple[BoundaryFacet, ...], ...]
    walls: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.regions)

    @property
    def dim(self) -> int:
        return self.bbox.dim

    def grid_coords(self, region_id: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(region_id, self.per_axis_counts))

    def region_id(self, coords) -> int:
        return int(np.ravel_multi_index(tuple(coords), self.per_axis_counts))

    def facet(self, region_id: int, facet_id: int) -> BoundaryFacet:
        return self.facets[region_id][facet_id]


@dataclass(frozen=True)
class DistanceMatrix:
    """Square distance matrix over data points followed by facet pseudo-vertices.

    Rows ``0..n_points-1`` are cloud points ``point_index``; the remaining rows
    are the facets listed in ``facet_ids``.  The triangle inequality is not
    assumed.
    """

    entries: np.ndarray
    point_index: np.ndarray
    facet_ids: tuple[int, ...] = ()

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise GeometryError("distance matrix must be square")
        idx = np.asarray(self.point_index, dtype=np.int64)
        if idx.shape[0] + len(self.facet_ids) != e.shape[0]:
            raise GeometryError("labels do not match matrix size")
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "point_index", idx)
        object.__setattr__(self, "facet_ids", tuple(int(f) for f in self.facet_ids))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def n_points(self) -> int:
        return self.point_index.shape[0]

    @property
    def vertex_labels(self) -> list[tuple[str, int]]:
        labels = [("point", int(i)) for i in self.point_index]
        labels += [("facet", f) for f in self.facet_ids]
        return labels

    def is_facet_vertex(self, v: int) -> bool:
        return v >= self.n_points

    @classmethod
    def from_points(cls, points, point_index=None) -> "DistanceMatrix":
        pts = np.asarray(points, dtype=float)
        if point_index is None:
            point_index = np.arange(pts.shape[0])
        return cls(pairwise_distances(pts), point_index)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    d = cdist(points, points)
    np.fill_diagonal(d, 0.0)
    # cdist is symmetric up to rounding; force exact symmetry
    return np.minimum(d, d.T)


def bounding_box(cloud: PointCloud, pad: float = 1e-9) -> HyperRect:
    """Smallest axis-aligned box around the cloud.

    Axes with zero extent are widened by ``pad`` times the largest extent
    (or by ``pad`` itself when every axis is degenerate), and at least by a
    few units in the last place so the widening survives rounding.
    """
    pts = cloud.points
    if pts.shape[0] == 0:
        raise GeometryError("empty point cloud")
    low = pts.min(axis=0).astype(float)
    high = pts.max(axis=0).astype(float)
    ext = high - low
    grow = pad * ext.max() if ext.max() > 0 else pad
    flat = ext <= 0
    grow = np.maximum(grow, 4 * np.spacing(np.abs(low)))
    low[flat] -= grow[flat]
    high[flat] += grow[flat]
    return HyperRect(low, high)


def grid_counts(m: int, dim: int) -> tuple[int, ...]:
    """Split ``m`` regions over ``dim`` axes, uniformly when m is a perfect power."""
    if m < 1:
        raise GeometryError("m must be positive")
    root = round(m ** (1.0 / dim))
    for r in (root - 1, root, root + 1):
        if r >= 1 and r**dim == m:
            return (r,) * dim
    counts = [1] * dim
    factors = []
    x, p = m, 2
    while x > 1:
        while x % p == 0:
            factors.append(p)
            x //= p
        p += 1
    for f in sorted(factors, reverse=True):
        i = int(np.argmin(counts))
        counts[i] *= f
    return tuple(sorted(counts, reverse=True))


def make_grid_partition(bbox: HyperRect, per_axis_counts) -> PartitionScheme:
    counts = tuple(int(c) for c in per_axis_counts)
    if len(counts) != bbox.dim:
        raise GeometryError("need one count per axis")
    if any(c < 1 for c in counts):
        raise GeometryError(f"grid counts must be positive, got {counts}")
    dim = bbox.dim
    edges = [np.linspace(bbox.low[a], bbox.high[a], counts[a] + 1) for a in range(dim)]
    # pin the outer edges exactly to the box
    for a in range(dim):
        edges[a][0], edges[a][-1] = bbox.low[a], bbox.high[a]

    regions = []
    facets = []
    for rid in range(prod(counts)):
        g = np.unravel_index(rid, counts)
        low = np.array([edges[a][g[a]] for a in range(dim)])
        high = np.array([edges[a][g[a] + 1] for a in range(dim)])
        box = HyperRect(low, high)
        regions.append(box)
        own = []
        for a in range(dim):
            others = [b for b in range(dim) if b != a]
            ext = HyperRect(low[others], high[others]) if others else None
            for side in (-1, 1):
                nb = g[a] + side
                if not 0 <= nb < counts[a]:
                    continue
                offset = low[a] if side < 0 else high[a]
                ng = list(g)
                ng[a] = nb
                own.append(
                    BoundaryFacet(
                        region_id=rid,
                        axis=a,
                        offset=float(offset),
                        extent=ext,
                        facet_id=len(own),
                        neighbor_id=int(np.ravel_multi_index(tuple(ng), counts)),
                        side=side,
                    )
                )
        facets.append(tuple(own))
    walls = tuple(e[1:-1].copy() for e in edges)
    return PartitionScheme(bbox, counts, tuple(regions), tuple(facets), walls)


def assign_points(cloud: PointCloud, scheme: PartitionScheme) -> list[np.ndarray]:
    """Index lists per region; a point on a wall goes to the higher grid cell."""
    pts = cloud.points
    if pts.shape[1] != scheme.dim:
        raise GeometryError("cloud and partition dimensions differ")
    lo, hi = scheme.bbox.low, scheme.bbox.high
    outside = np.any((pts < lo) | (pts > hi), axis=1)
    if outside.any():
        bad = int(np.flatnonzero(outside)[0])
        raise GeometryError(f"point {bad} lies outside the partition box")
    coords = [np.searchsorted(scheme.walls[a], pts[:, a], side="right") for a in range(scheme.dim)]
    rid = np.ravel_multi_index(tuple(coords), scheme.per_axis_counts)
    order = np.argsort(rid, kind="stable")
    bounds = np.searchsorted(rid[order], np.arange(scheme.m + 1))
    return [order[bounds[r]:bounds[r + 1]] for r in range(scheme.m)]


def _box_distance(lo1, hi1, lo2, hi2) -> float:
    gap = np.maximum(0.0, np.maximum(lo1 - hi2, lo2 - hi1))
    return float(np.sqrt(np.dot(gap, gap)))


def point_facet_distance(p, facet: BoundaryFacet) -> float:
    p = np.asarray(p, dtype=float)
    lo, hi = facet.box(p.shape[0])
    nearest = np.clip(p, lo, hi)
    return float(np.linalg.norm(p - nearest))


def facet_distances(points: np.ndarray, facet: BoundaryFacet) -> np.ndarray:
    """Vectorised ``point_facet_distance`` over the rows of ``points``."""
    points = np.asarray(points, dtype=float)
    lo, hi = facet.box(points.shape[1])
    return np.linalg.norm(points - np.clip(points, lo, hi), axis=1)


def facet_facet_distance(f: BoundaryFacet, g: BoundaryFacet, dim: int) -> float:
    return _box_distance(*f.box(dim), *g.box(dim))


def build_augmented_distance_matrix(cloud: PointCloud, region_indices, facets=()) -> DistanceMatrix:
    idx = np.asarray(region_indices, dtype=np.int64)
    if idx.shape[0] == 0:
        raise GeometryError("region has no points")
    pts = cloud.points[idx]
    facets = tuple(facets)
    n_l, nf = idx.shape[0], len(facets)
    if nf == 0:
        return DistanceMatrix(pairwise_distances(pts), idx)
    d = np.zeros((n_l + nf, n_l + nf))
    d[:n_l, :n_l] = pairwise_distances(pts)
    for a, f in enumerate(facets):
        col = facet_distances(pts, f)
        d[:n_l, n_l + a] = col
        d[n_l + a, :n_l] = col
        for b in range(a):
            v = facet_facet_distance(f, facets[b], cloud.dim)
            d[n_l + a, n_l + b] = d[n_l + b, n_l + a] = v
    return DistanceMatrix(d, idx, tuple(f.facet_id for f in facets))
