"""Boundary-matrix reduction over Z/2, persistence diagrams and representative cycles."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .rips import Filtration, build_filtration, enclosing_radius


class MalformedFiltration(ValueError):
    pass


@dataclass
class ReducedMatrix:
    """Reduced boundary matrix R, stored as packed sorted columns.

    ``low[j]`` is the lowest nonzero row of column j (or -1) and
    ``pivot_of[i]`` the column whose low is row i (or -1).
    """

    low: np.ndarray
    pivot_of: np.ndarray
    start: np.ndarray
    length: np.ndarray
    entries: np.ndarray

    def column(self, j: int) -> np.ndarray:
        if self.length[j] == 0:
            return np.empty(0, dtype=np.int64)
        s = self.start[j]
        return self.entries[s:s + self.length[j]]

    @property
    def pairs(self) -> np.ndarray:
        """(birth position, death position) rows for every nonzero column."""
        deaths = np.flatnonzero(self.low >= 0)
        return np.stack([self.low[deaths], deaths], axis=1)

    def essential(self, filtration: Filtration) -> np.ndarray:
        """Positive simplexes that are never killed (infinite features)."""
        zero = self.low < 0
        paired = self.pivot_of >= 0
        return np.flatnonzero(zero & ~paired)

    def check_fixed_point(self) -> bool:
        lows = self.low[self.low >= 0]
        return lows.size == np.unique(lows).size


def reduce(filtration: Filtration) -> ReducedMatrix:
    faces = filtration.boundary()
    _check_order(filtration, faces)
    nfaces = np.where(filtration.dims > 0, filtration.dims + 1, 0).astype(np.int64)
    low, pivot_of, start, length, buf = _kernels.reduce_columns(faces, nfaces)
    return ReducedMatrix(low, pivot_of, start, length, buf)


def _check_order(filtration: Filtration, faces: np.ndarray) -> None:
    S = len(filtration)
    if S == 0:
        return
    pos = np.arange(S)[:, None]
    bad = (faces >= 0) & (faces >= pos)
    if bad.any():
        j = int(np.flatnonzero(bad.any(axis=1))[0])
        raise MalformedFiltration(f"simplex at position {j} precedes one of its faces")
    if np.any(np.diff(filtration.values) < 0):
        raise MalformedFiltration("filtration values are not sorted")


@dataclass
class PersistenceDiagram:
    """Multiset of (dim, birth, death) with zero-persistence pairs dropped.

    ``birth_index``/``death_index`` point back into the source filtration
    (-1 when unknown or for infinite deaths).
    """

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray
    birth_index: np.ndarray = field(default=None, repr=False)
    death_index: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.dims = np.asarray(self.dims, dtype=np.int64).reshape(-1)
        self.births = np.asarray(self.births, dtype=float).reshape(-1)
        self.deaths = np.asarray(self.deaths, dtype=float).reshape(-1)
        n = self.dims.shape[0]
        if self.birth_index is None:
            self.birth_index = np.full(n, -1, dtype=np.int64)
        if self.death_index is None:
            self.death_index = np.full(n, -1, dtype=np.int64)
        self.birth_index = np.asarray(self.birth_index, dtype=np.int64)
        self.death_index = np.asarray(self.death_index, dtype=np.int64)
        if not (self.births.shape[0] == self.deaths.shape[0] == n):
            raise ValueError("dims/births/deaths length mismatch")

    @classmethod
    def from_features(cls, features) -> "PersistenceDiagram":
        features = list(features)
        if not features:
            return cls.empty()
        dims, births, deaths = zip(*features)
        return cls(dims, births, deaths).canonical()

    @classmethod
    def empty(cls) -> "PersistenceDiagram":
        return cls(np.empty(0, dtype=np.int64), np.empty(0), np.empty(0))

    def __len__(self):
        return self.dims.shape[0]

    @property
    def features(self) -> list[tuple[int, float, float]]:
        return [(int(r), float(b), float(d)) for r, b, d in zip(self.dims, self.births, self.deaths)]

    @property
    def persistence(self) -> np.ndarray:
        return self.deaths - self.births

    def canonical(self) -> "PersistenceDiagram":
        order = np.lexsort((self.birth_index, self.deaths, self.births, self.dims))
        return self._take(order)

    def _take(self, idx) -> "PersistenceDiagram":
        return PersistenceDiagram(self.dims[idx], self.births[idx], self.deaths[idx],
                                  self.birth_index[idx], self.death_index[idx])

    def restrict(self, dim: int, finite: bool = False) -> "PersistenceDiagram":
        mask = self.dims == dim
        if finite:
            mask &= np.isfinite(self.deaths)
        return self._take(np.flatnonzero(mask))

    def drop_zero_persistence(self) -> "PersistenceDiagram":
        return self._take(np.flatnonzero(self.deaths > self.births))

    def concat(self, other: "PersistenceDiagram") -> "PersistenceDiagram":
        return PersistenceDiagram(
            np.concatenate([self.dims, other.dims]),
            np.concatenate([self.births, other.births]),
            np.concatenate([self.deaths, other.deaths]),
            np.concatenate([self.birth_index, other.birth_index]),
            np.concatenate([self.death_index, other.death_index]),
        )

    def same_features(self, other: "PersistenceDiagram") -> bool:
        a, b = self.canonical(), other.canonical()
        return (len(a) == len(b) and np.array_equal(a.dims, b.dims)
                and np.array_equal(a.births, b.births) and np.array_equal(a.deaths, b.deaths))

    def __eq__(self, other):
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self.same_features(other)

    # --- CSV -------------------------------------------------------------
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dim", "birth", "death"])
        for r, b, d in self.canonical().features:
            w.writerow([r, format_value(b), format_value(d)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "PersistenceDiagram":
        text = _read_text(source)
        rows = list(csv.DictReader(io.StringIO(text)))
        feats = [(int(r["dim"]), parse_value(r["birth"]), parse_value(r["death"])) for r in rows]
        return cls.from_features(feats)

    def to_records(self) -> list[dict]:
        return [{"dim": r, "birth": b, "death": (None if math.isinf(d) else d)}
                for r, b, d in self.canonical().features]

    @classmethod
    def from_records(cls, records) -> "PersistenceDiagram":
        return cls.from_features(
            (int(x["dim"]), float(x["birth"]), math.inf if x["death"] is None else float(x["death"]))
            for x in records
        )


def format_value(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def parse_value(s: str) -> float:
    return float(s.strip())


def _read_text(source) -> str:
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str) and "\n" not in source and Path(source).exists():
        return Path(source).read_text()
    if hasattr(source, "read"):
        return source.read()
    return str(source)


def _reported_dims(filtration: Filtration, max_hom_dim: int | None) -> int:
    # H_max_dim has no cofaces to die against, so it is not reported
    top = max(filtration.max_dim - 1, 0)
    return top if max_hom_dim is None else min(max_hom_dim, top)


def diagram(reduced: ReducedMatrix, filtration: Filtration,
            max_hom_dim: int | None = None) -> PersistenceDiagram:
    top = _reported_dims(filtration, max_hom_dim)
    pairs = reduced.pairs
    b, d = pairs[:, 0], pairs[:, 1]
    dims_f = filtration.dims[b]
    keep = (dims_f <= top) & (filtration.values[d] > filtration.values[b])
    b, d = b[keep], d[keep]
    ess = reduced.essential(filtration)
    ess = ess[filtration.dims[ess] <= top]
    dgm = PersistenceDiagram(
        np.concatenate([filtration.dims[b], filtration.dims[ess]]),
        np.concatenate([filtration.values[b], filtration.values[ess]]),
        np.concatenate([filtration.values[d], np.full(ess.shape[0], np.inf)]),
        np.concatenate([b, ess]),
        np.concatenate([d, np.full(ess.shape[0], -1, dtype=np.int64)]),
    )
    return dgm.canonical()


@dataclass(frozen=True)
class RepresentativeCycle:
    dim: int
    birth: float
    death: float
    birth_index: int
    death_index: int
    simplices: tuple[int, ...]
    vertex_ids: frozenset

    @property
    def persistence(self) -> float:
        return self.death - self.birth


def representative_cycles(reduced: ReducedMatrix, filtration: Filtration, k: int,
                          dgm: PersistenceDiagram | None = None) -> list[RepresentativeCycle]:
    """One cycle per dim-k feature of ``dgm`` (in the diagram's order).

    Finite features use the reduced column of the death simplex; infinite
    ones the chain accumulated at the birth column.  H0 features are
    represented by their birth vertex.
    """
    if dgm is None:
        dgm = diagram(reduced, filtration)
    sub = dgm.restrict(k)
    verts = filtration.vertices
    out = []
    essential_cols = None
    for b_idx, d_idx, birth, death in zip(sub.birth_index, sub.death_index, sub.births, sub.deaths):
        if k == 0:
            simp = (int(b_idx),)
        elif d_idx >= 0:
            simp = tuple(int(x) for x in reduced.column(int(d_idx)))
        else:
            if essential_cols is None:
                essential_cols = birth_chains(filtration, k)
            simp = essential_cols[int(b_idx)]
        vs = verts[list(simp), : k + 1].ravel()
        out.append(RepresentativeCycle(k, float(birth), float(death), int(b_idx), int(d_idx),
                                       simp, frozenset(int(v) for v in vs if v >= 0)))
    return out


def birth_chains(filtration: Filtration, k: int) -> dict[int, tuple[int, ...]]:
    """Birth cycles (V columns) of positive dim-k simplexes, via a tracked
    reduction of the dim <= k skeleton."""
    sel = np.flatnonzero(filtration.dims <= k)
    remap = np.full(len(filtration), -1, dtype=np.int64)
    remap[sel] = np.arange(sel.size)
    faces = filtration.boundary()[sel]
    faces = np.where(faces >= 0, remap[np.maximum(faces, 0)], -1)
    dims = filtration.dims[sel]
    nfaces = np.where(dims > 0, dims + 1, 0).astype(np.int64)
    low, pivot_of, *_, vstart, vlength, vbuf = _kernels.reduce_columns_tracked(faces, nfaces)
    out = {}
    for j in np.flatnonzero((low < 0) & (dims == k)):
        chain = vbuf[vstart[j]:vstart[j] + vlength[j]]
        out[int(sel[j])] = tuple(int(sel[c]) for c in chain)
    return out


def compute_diagram(dist, max_hom_dim: int = 1, t_max: float | None = None,
                    engine: str = "sa", **kwargs) -> PersistenceDiagram:
    """Full VR persistence of a distance matrix for homology dims 0..max_hom_dim."""
    if engine == "ripser":
        return ripser_diagram(dist, max_hom_dim, t_max)
    if engine != "sa":
        raise ValueError(f"unknown engine {engine!r}")
    filt = build_filtration(dist, max_hom_dim + 1, t_max, **kwargs)
    return diagram(reduce(filt), filt, max_hom_dim)


def ripser_diagram(dist, max_hom_dim: int = 1, t_max: float | None = None) -> PersistenceDiagram:
    """Same diagram computed by the Ripser algorithm as implemented in
    giotto-ph (float32 internally)."""
    from gph import ripser_parallel

    d = dist.entries if hasattr(dist, "entries") else np.asarray(dist, dtype=float)
    thresh = np.inf if t_max is None else float(t_max)
    dgms = ripser_parallel(d, metric="precomputed", maxdim=max_hom_dim, thresh=thresh, n_threads=1)["dgms"]
    feats = []
    for r, dg in enumerate(dgms):
        for b, de in dg:
            if de > b:
                feats.append((r, float(b), float(de)))
    return PersistenceDiagram.from_features(feats)


def _collapsed_tree(d: np.ndarray, t_max: float):
    import gudhi

    st = gudhi.RipsComplex(distance_matrix=d, max_edge_length=float(t_max)).create_simplex_tree(max_dimension=1)
    before = st.num_simplices()
    st.collapse_edges()
    return st, before


def _tree_diagram(st, max_hom_dim: int) -> PersistenceDiagram:
    st.expansion(max_hom_dim + 1)
    st.compute_persistence(homology_coeff_field=2, persistence_dim_max=True)
    feats = []
    for r in range(max_hom_dim + 1):
        for b, de in st.persistence_intervals_in_dimension(r):
            if de > b:
                feats.append((r, float(b), float(de)))
    return PersistenceDiagram.from_features(feats)


def collapsed_rips_diagram(dist, max_hom_dim: int, t_max: float) -> PersistenceDiagram:
    """Diagram of the Rips filtration cut at ``t_max``, computed by gudhi after
    an edge collapse (which keeps the diagram unchanged)."""
    d = dist.entries if hasattr(dist, "entries") else np.asarray(dist, dtype=float)
    return _tree_diagram(_collapsed_tree(d, t_max)[0], max_hom_dim)


def cutoff_diagram(dist, max_hom_dim: int, t_max: float, min_shrink: float = 0.5) -> PersistenceDiagram:
    """Diagram cut at ``t_max``: gudhi when the edge collapse removes at least
    ``min_shrink`` of the graph, ripser otherwise (evenly spread samples such
    as a sphere barely collapse, and gudhi would store every simplex)."""
    d = dist.entries if hasattr(dist, "entries") else np.asarray(dist, dtype=float)
    st, before = _collapsed_tree(d, t_max)
    if st.num_simplices() > (1.0 - min_shrink) * before:
        return ripser_diagram(d, max_hom_dim, t_max)
    return _tree_diagram(st, max_hom_dim)


def grown_cutoff_diagram(dist, max_hom_dim: int, start: float, growth: float = 1.03) -> PersistenceDiagram:
    """Diagram from a cutoff that starts at ``start`` and grows by ``growth``
    until no feature of dim >= 1 and at most one component survive.

    Pairs born below the final cutoff are exact; a feature born above it is
    not seen.  Each cutoff goes through ``cutoff_diagram``; at the enclosing
    radius the cutoff is exact and ripser takes over, since the collapse gains
    little on a complete graph.
    """
    er = enclosing_radius(dist)
    t = min(er, max(float(start), 0.0))
    while True:
        dgm = ripser_diagram(dist, max_hom_dim) if t >= er else cutoff_diagram(dist, max_hom_dim, t)
        inf = ~np.isfinite(dgm.deaths)
        if t >= er or (np.sum(inf & (dgm.dims == 0)) <= 1 and not np.any(inf & (dgm.dims > 0))):
            return dgm
        t = min(er, t * growth)

