"""Divide-and-conquer persistence: per-region diagrams against partition walls,
merging of wall-touching features, and birth/death estimators for merged groups.
"""
from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from . import _kernels
from .geometry import (
    PartitionScheme,
    PointCloud,
    assign_points,
    bounding_box,
    build_augmented_distance_matrix,
    grid_counts,
    make_grid_partition,
    pairwise_distances,
)
from .persistence import (PersistenceDiagram, birth_chains, compute_diagram, diagram, grown_cutoff_diagram,
                          reduce, representative_cycles)
from .rips import build_filtration

log = logging.getLogger(__name__)

MERGE_METHODS = ("rips", "projected")
ESTIMATORS = ("naive", "pointwise", "conservative")
# Above this many pooled points the naive estimate leaves the Standard Algorithm
# for the collapsed-complex route.
NAIVE_SA_LIMIT = 150


class MergeError(RuntimeError):
    pass


@dataclass(frozen=True)
class PotentialFeature:
    region_id: int
    feature_index: int
    dim: int
    birth: float
    death: float
    rep_points: tuple[int, ...]
    facet_ids: frozenset
    # vertices of the cycle at birth time; only filled when a naive estimate is wanted
    birth_points: tuple[int, ...] = ()

    @property
    def key(self) -> tuple[int, int]:
        return (self.region_id, self.feature_index)

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class MergeGroup:
    group_id: int
    dim: int
    members: tuple[PotentialFeature, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("a merge group needs at least one member")
        if any(p.dim != self.dim for p in self.members):
            raise ValueError("merge group members must share a dimension")

    @property
    def keys(self) -> list[tuple[int, int]]:
        return [p.key for p in self.members]

    @property
    def rep_points(self) -> np.ndarray:
        return np.unique(np.concatenate([np.asarray(p.rep_points, dtype=np.int64) for p in self.members]))

    @property
    def pooled_points(self) -> np.ndarray:
        """Representative points together with the birth-cycle points."""
        return np.unique(np.concatenate([np.asarray(p.rep_points + p.birth_points, dtype=np.int64)
                                         for p in self.members]))

    @property
    def births(self) -> np.ndarray:
        return np.array([p.birth for p in self.members])

    @property
    def deaths(self) -> np.ndarray:
        return np.array([p.death for p in self.members])


@dataclass
class RegionResult:
    region_id: int
    point_index: np.ndarray
    n_facets: int
    complete: PersistenceDiagram
    potentials: list[PotentialFeature]
    discarded: int = 0
    warnings: list[str] = field(default_factory=list)
    seconds: float = 0.0
    n_simplices: int = 0

    def summary(self) -> dict:
        return {
            "region": self.region_id,
            "points": int(self.point_index.shape[0]),
            "facets": self.n_facets,
            "simplices": self.n_simplices,
            "complete": {str(r): int(np.sum(self.complete.dims == r)) for r in np.unique(self.complete.dims)},
            "potential": len(self.potentials),
            "discarded": self.discarded,
            "seconds": round(self.seconds, 4),
        }


@dataclass
class MergedFeature:
    dim: int
    birth: float
    death: float
    group: MergeGroup


@dataclass
class DacDiagram:
    complete: PersistenceDiagram
    complete_regions: np.ndarray
    merged: list[MergedFeature]
    estimator_tag: str
    report: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[int, float, float, str, str]]:
        rows = [(int(r), float(b), float(d), "complete", f"region:{int(l)}")
                for (r, b, d), l in zip(self.complete.features, self.complete_regions)]
        rows += [(f.dim, f.birth, f.death, "merged", f"group:{f.group.group_id}") for f in self.merged]
        rows.sort(key=lambda x: (x[0], x[1], x[2], x[3], x[4]))
        return rows

    def to_diagram(self) -> PersistenceDiagram:
        merged = PersistenceDiagram.from_features((f.dim, f.birth, f.death) for f in self.merged)
        return self.complete.concat(merged).canonical()

    @property
    def n_merged(self) -> int:
        return len(self.merged)


# --- per-region computation ------------------------------------------------

def _region_result(cloud: PointCloud, scheme: PartitionScheme, rid: int, idx: np.ndarray,
                   k: int, t_max: float | None, birth_cycles: bool = False) -> RegionResult:
    t0 = time.perf_counter()
    facets = scheme.facets[rid]
    dist = build_augmented_distance_matrix(cloud, idx, facets)
    filt = build_filtration(dist, k + 1, t_max)
    red = reduce(filt)
    dgm = diagram(red, filt, k)
    n_pts = dist.n_points
    verts = filt.vertices

    keep = np.ones(len(dgm), dtype=bool)
    potentials = []
    discarded = 0
    # H0: drop components born at a wall or killed through one
    for i in np.flatnonzero(dgm.dims == 0):
        bv = verts[dgm.birth_index[i], 0]
        di = dgm.death_index[i]
        if bv >= n_pts or (di >= 0 and verts[di, :2].max() >= n_pts):
            keep[i] = False
            discarded += 1
    for r in range(1, k + 1):
        rows = np.flatnonzero(dgm.dims == r)
        if rows.size == 0:
            continue
        cycles = representative_cycles(red, filt, r, dgm)
        chains = birth_chains(filt, k) if birth_cycles and r == k else None
        for j, (i, cyc) in enumerate(zip(rows, cycles)):
            vs = np.fromiter(cyc.vertex_ids, dtype=np.int64)
            facet_v = vs[vs >= n_pts]
            if facet_v.size == 0:
                continue
            keep[i] = False
            pts = vs[vs < n_pts]
            if pts.size == 0 or r != k:
                # cycles made of walls only, or wall-touching features below
                # the target dimension, are not merged
                discarded += 1
                continue
            potentials.append(PotentialFeature(
                region_id=rid,
                feature_index=j,
                dim=r,
                birth=float(cyc.birth),
                death=float(cyc.death),
                rep_points=tuple(sorted(int(x) for x in dist.point_index[pts])),
                facet_ids=frozenset(dist.facet_ids[v - n_pts] for v in facet_v),
                birth_points=() if chains is None else _chain_points(chains[int(cyc.birth_index)], filt, k, dist),
            ))
    complete = PersistenceDiagram(dgm.dims[keep], dgm.births[keep], dgm.deaths[keep],
                                  dgm.birth_index[keep], dgm.death_index[keep])
    return RegionResult(rid, idx, len(facets), complete, potentials, discarded,
                        seconds=time.perf_counter() - t0, n_simplices=len(filt))


def _chain_points(chain, filt, k, dist) -> tuple[int, ...]:
    vs = filt.vertices[list(chain), : k + 1].ravel()
    vs = vs[(vs >= 0) & (vs < dist.n_points)]
    return tuple(sorted(set(int(x) for x in dist.point_index[vs])))


def subregion_diagrams(cloud: PointCloud, scheme: PartitionScheme, k: int,
                       t_max: float | None = None, threads: int = 1,
                       birth_cycles: bool = False) -> list[RegionResult]:
    if k < 0:
        raise ValueError("k must be non-negative")
    parts = assign_points(cloud, scheme)

    def work(rid):
        idx = parts[rid]
        if idx.shape[0] == 0:
            return RegionResult(rid, idx, len(scheme.facets[rid]), PersistenceDiagram.empty(), [],
                                warnings=[f"region {rid} is empty"])
        return _region_result(cloud, scheme, rid, idx, k, t_max, birth_cycles)

    if threads > 1 and scheme.m > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(work, range(scheme.m)))
    return [work(rid) for rid in range(scheme.m)]


# --- merging -----------------------------------------------------------------

def feature_set_distance(A: PotentialFeature, B: PotentialFeature, cloud: PointCloud) -> float:
    """Smallest distance between the representative points of two features."""
    pa = cloud.points[list(A.rep_points)]
    pb = cloud.points[list(B.rep_points)]
    return float(cdist(pa, pb).min())


def _meta_matrix(potentials, cloud) -> np.ndarray:
    P = len(potentials)
    d = np.zeros((P, P))
    for a in range(P):
        for b in range(a):
            d[a, b] = d[b, a] = feature_set_distance(potentials[a], potentials[b], cloud)
    return d


@dataclass
class MergeOutcome:
    groups: list[MergeGroup]
    unmerged: list[tuple[int, int]]
    conflicts: list[dict] = field(default_factory=list)
    incomplete: list[list[tuple[int, int]]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    method: str = ""


def representative_rips_merge(potentials: list[PotentialFeature], k: int, cloud: PointCloud,
                              first_group_id: int = 0) -> MergeOutcome:
    """Group potential features along the H_k cycles of a Rips filtration whose
    vertices are the features themselves, at their nearest-point distances."""
    out = MergeOutcome([], [], method="rips")
    if len(potentials) < k + 2:
        out.diagnostics.append(f"{len(potentials)} potential features cannot carry an H{k} cycle")
        out.unmerged = [p.key for p in potentials]
        return out
    meta = _meta_matrix(potentials, cloud)
    filt = build_filtration(meta, k + 1)
    red = reduce(filt)
    dgm = diagram(red, filt, k)
    cycles = representative_cycles(red, filt, k, dgm)
    order = sorted(range(len(cycles)), key=lambda i: (-cycles[i].persistence, cycles[i].birth, i))
    owner: dict[int, int] = {}
    gid = first_group_id
    for i in order:
        cyc = cycles[i]
        members = sorted(cyc.vertex_ids)
        taken = [v for v in members if v in owner]
        if taken:
            out.conflicts.append({
                "meta_birth": cyc.birth, "meta_death": cyc.death,
                "members": [list(potentials[v].key) for v in members],
                "already_grouped": [list(potentials[v].key) for v in taken],
            })
        fresh = [v for v in members if v not in owner]
        if not fresh:
            continue
        for v in fresh:
            owner[v] = gid
        out.groups.append(MergeGroup(gid, k, tuple(potentials[v] for v in fresh)))
        gid += 1
    out.unmerged = [p.key for v, p in enumerate(potentials) if v not in owner]
    return out


def topological_projection(f: PotentialFeature, cloud: PointCloud,
                           scheme: PartitionScheme) -> dict[int, np.ndarray]:
    """Representative points of ``f`` projected onto each of its walls
    (orthogonal projection, clipped to the wall's extent)."""
    pts = cloud.points[list(f.rep_points)]
    out = {}
    for fid in sorted(f.facet_ids):
        facet = scheme.facet(f.region_id, fid)
        lo, hi = facet.box(scheme.dim)
        out[fid] = np.clip(pts, lo, hi)
    return out


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    d = cdist(a, b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def projected_merge(potentials: list[PotentialFeature], scheme: PartitionScheme, cloud: PointCloud,
                    eps_proj: float | None = None, first_group_id: int = 0) -> MergeOutcome:
    """Link features whose projections onto a shared wall agree, then keep the
    connected groups in which every wall of every member is cancelled."""
    out = MergeOutcome([], [], method="projected")
    P = len(potentials)
    if P == 0:
        return out
    proj = [topological_projection(p, cloud, scheme) for p in potentials]
    by_wall: dict[tuple, list[tuple[int, int]]] = {}
    for v, p in enumerate(potentials):
        for fid in p.facet_ids:
            facet = scheme.facet(p.region_id, fid)
            by_wall.setdefault(facet.wall_key(), []).append((v, fid))
    cancelled = [set() for _ in range(P)]
    ei, ej = [], []
    for entries in by_wall.values():
        for (a, fa), (b, fb) in itertools.combinations(entries, 2):
            A, B = potentials[a], potentials[b]
            if scheme.facet(A.region_id, fa).neighbor_id != B.region_id:
                continue
            eps = eps_proj if eps_proj is not None else 2.0 * max(A.birth, B.birth)
            if hausdorff(proj[a][fa], proj[b][fb]) <= eps:
                ei.append(a)
                ej.append(b)
                cancelled[a].add(fa)
                cancelled[b].add(fb)
    g = coo_matrix((np.ones(len(ei)), (ei, ej)), shape=(P, P))
    ncomp, labels = connected_components(g, directed=False)
    gid = first_group_id
    grouped = set()
    for c in range(ncomp):
        members = [v for v in range(P) if labels[v] == c]
        if all(cancelled[v] == set(potentials[v].facet_ids) for v in members):
            out.groups.append(MergeGroup(gid, potentials[members[0]].dim, tuple(potentials[v] for v in members)))
            grouped.update(members)
            gid += 1
        else:
            out.incomplete.append([potentials[v].key for v in members])
    out.unmerged = [p.key for v, p in enumerate(potentials) if v not in grouped]
    return out


# --- estimators --------------------------------------------------------------

def naive_estimate(group: MergeGroup, cloud: PointCloud, k: int,
                   engine: str = "auto") -> tuple[float, float]:
    """Most persistent H_k feature of the Rips filtration on the pooled points.

    The pool adds each member's birth-cycle points to its representative
    points.  A death cycle may cut across chords as long as the death value,
    so on its own it skips points and the birth comes out late.  Small pools
    run through the Standard Algorithm, larger ones through a collapsed Rips
    complex with a growing cutoff (``grown_cutoff_diagram``).
    """
    pts = cloud.points[group.pooled_points]
    if engine == "auto":
        engine = "sa" if pts.shape[0] <= NAIVE_SA_LIMIT else "collapsed"
    d = pairwise_distances(pts)
    if engine == "collapsed":
        # start at the largest edge of the most spread-out (k+2)-subset, which
        # sits at or above the death of a sphere-like feature
        start = 0.0
        if pts.shape[0] >= k + 2:
            sub = max_min_subset(d, k + 2)
            start = d[np.ix_(sub, sub)].max()
        dgm = grown_cutoff_diagram(d, k, start).restrict(k)
    else:
        dgm = compute_diagram(d, k, engine=engine).restrict(k)
    if len(dgm) == 0:
        raise MergeError(f"group {group.group_id}: pooled points carry no H{k} feature")
    i = int(np.argmax(dgm.persistence))
    return float(dgm.births[i]), float(dgm.deaths[i])


def pointwise_birth(group: MergeGroup) -> float:
    return float(group.births.max())


def _dispersion_key(d: np.ndarray, idx) -> tuple:
    sub = d[np.ix_(idx, idx)]
    return tuple(np.sort(sub[np.triu_indices(len(idx), 1)]))


def max_min_subset(d: np.ndarray, size: int, exact_cap: int = 20) -> list[int]:
    """Indices of a ``size``-subset maximising its smallest pairwise distance.

    Up to ``exact_cap`` points every subset is enumerated and ties are broken
    by the next-smallest distances, and so on.  Larger inputs binary-search the
    largest threshold t whose graph {d >= t} still holds a ``size``-clique.
    """
    N = d.shape[0]
    if size > N:
        raise ValueError(f"need at least {size} points, got {N}")
    if N <= exact_cap:
        best, best_key = None, None
        for c in itertools.combinations(range(N), size):
            key = _dispersion_key(d, list(c))
            if best_key is None or key > best_key:
                best, best_key = list(c), key
        return best
    if size == 1:
        return [0]
    cand = np.unique(d[np.triu_indices(N, 1)])
    lo, hi = 0, cand.size - 1  # cand[lo] always feasible (every pair qualifies)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _kernels.find_clique(d >= cand[mid], size)[0] >= 0:
            lo = mid
        else:
            hi = mid - 1
    return sorted(int(x) for x in _kernels.find_clique(d >= cand[lo], size))


def pointwise_death(group: MergeGroup, cloud: PointCloud, k: int, exact_cap: int = 20) -> float:
    """Largest edge of the most spread-out (k+2)-subset of the pooled points."""
    pts = cloud.points[group.rep_points]
    if pts.shape[0] < k + 2:
        raise MergeError(f"group {group.group_id}: {pts.shape[0]} points, need {k + 2}")
    d = pairwise_distances(pts)
    sub = max_min_subset(d, k + 2, exact_cap)
    return float(d[np.ix_(sub, sub)].max())


def conservative_estimate(group: MergeGroup) -> tuple[float, float]:
    return float(group.births.min()), float(group.deaths.max())


def estimate(group: MergeGroup, cloud: PointCloud, k: int, estimator: str,
             exact_cap: int = 20, naive_engine: str = "auto") -> tuple[float, float]:
    if estimator == "naive":
        return naive_estimate(group, cloud, k, naive_engine)
    if estimator == "pointwise":
        return pointwise_birth(group), pointwise_death(group, cloud, k, exact_cap)
    if estimator == "conservative":
        return conservative_estimate(group)
    raise ValueError(f"unknown estimator {estimator!r}")


# --- pipeline ----------------------------------------------------------------

def make_scheme(cloud: PointCloud, m: int) -> PartitionScheme:
    return make_grid_partition(bounding_box(cloud), grid_counts(m, cloud.dim))


def run_dac(cloud: PointCloud, k: int, m: int | None = None, scheme: PartitionScheme | None = None,
            merge_method: str = "rips", estimator: str = "pointwise", eps_proj: float | None = None,
            exact_cap: int = 20, t_max: float | None = None, threads: int = 1,
            naive_engine: str = "auto") -> DacDiagram:
    if merge_method not in MERGE_METHODS:
        raise ValueError(f"merge_method must be one of {MERGE_METHODS}")
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if scheme is None:
        if m is None:
            raise ValueError("give either m or a partition scheme")
        scheme = make_scheme(cloud, m)
    t0 = time.perf_counter()
    regions = subregion_diagrams(cloud, scheme, k, t_max, threads, birth_cycles=estimator == "naive")
    t_regions = time.perf_counter() - t0

    potentials = [p for r in regions for p in r.potentials]
    warnings = [w for r in regions for w in r.warnings]
    outcome = MergeOutcome([], [], method="none")
    if potentials and k >= 1:
        method = merge_method
        if method == "rips" and (scheme.m == 2 or len(potentials) < k + 2):
            warnings.append(f"falling back to projected merge ({len(potentials)} potentials, m={scheme.m})")
            method = "projected"
        if method == "rips":
            outcome = representative_rips_merge(potentials, k, cloud)
        else:
            outcome = projected_merge(potentials, scheme, cloud, eps_proj)
    elif potentials:
        outcome.unmerged = [p.key for p in potentials]

    merged = []
    for g in outcome.groups:
        try:
            b, d = estimate(g, cloud, k, estimator, exact_cap, naive_engine)
        except MergeError as exc:
            warnings.append(str(exc))
            continue
        if d > b:
            merged.append(MergedFeature(k, b, d, g))
        else:
            warnings.append(f"group {g.group_id}: estimate ({b:.6g}, {d:.6g}) has no persistence")

    complete = [r.complete for r in regions]
    dims = np.concatenate([c.dims for c in complete]) if complete else np.empty(0, dtype=np.int64)
    comp = PersistenceDiagram(
        dims,
        np.concatenate([c.births for c in complete]),
        np.concatenate([c.deaths for c in complete]),
        np.concatenate([c.birth_index for c in complete]),
        np.concatenate([c.death_index for c in complete]),
    )
    region_of = np.concatenate([np.full(len(c), r.region_id) for c, r in zip(complete, regions)]).astype(np.int64)
    order = np.lexsort((region_of, comp.birth_index, comp.deaths, comp.births, comp.dims))
    comp = comp._take(order)
    region_of = region_of[order]

    report = {
        "k": k,
        "m": scheme.m,
        "grid": list(scheme.per_axis_counts),
        "merge_method": outcome.method,
        "estimator": estimator,
        "regions": [r.summary() for r in regions],
        "max_region_points": int(max(r.point_index.shape[0] for r in regions)),
        "potential_count": len(potentials),
        "groups": [{"id": g.group_id, "members": [list(x) for x in g.keys]} for g in outcome.groups],
        "unmerged_potentials": [list(x) for x in outcome.unmerged],
        "incomplete_groups": [[list(x) for x in grp] for grp in outcome.incomplete],
        "conflicts": outcome.conflicts,
        "diagnostics": outcome.diagnostics,
        "warnings": warnings,
        "seconds": {"regions": round(t_regions, 4), "total": round(time.perf_counter() - t0, 4)},
    }
    return DacDiagram(comp, region_of, merged, estimator, report)
