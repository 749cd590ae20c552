"""Vietoris-Rips filtrations from (possibly non-metric) distance matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .geometry import DistanceMatrix

DEFAULT_MAX_SIMPLICES = 60_000_000


class FiltrationTooLarge(RuntimeError):
    """Raised when the clique count exceeds the configured cap."""


class Simplex(NamedTuple):
    vertices: tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass
class Filtration:
    """Simplexes in filtration order: (value, dim, lexicographic vertices).

    ``vertices`` is an (S, max_dim+1) array padded with -1.
    """

    vertices: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    max_dim: int
    t_max: float
    n_vertices: int
    _faces: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i) -> Simplex:
        d = int(self.dims[i])
        return Simplex(tuple(int(v) for v in self.vertices[i, : d + 1]), float(self.values[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def simplexes(self) -> list[Simplex]:
        return list(self)

    def counts(self) -> list[int]:
        return np.bincount(self.dims, minlength=self.max_dim + 1).tolist()

    def boundary(self) -> np.ndarray:
        """Face positions of every simplex, sorted, padded with -1."""
        if self._faces is None:
            self._faces = _face_positions(self)
        return self._faces

    def prefix(self, t: float) -> "Filtration":
        """The sub-filtration of simplexes with value <= t."""
        keep = int(np.searchsorted(self.values, t, side="right"))
        return Filtration(
            self.vertices[:keep], self.dims[:keep], self.values[:keep],
            self.max_dim, min(t, self.t_max), self.n_vertices,
        )


def _as_array(dist) -> np.ndarray:
    if isinstance(dist, DistanceMatrix):
        return dist.entries
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    return d


def enclosing_radius(dist) -> float:
    d = _as_array(dist)
    if d.shape[0] == 0:
        raise ValueError("empty distance matrix")
    return float(d.max(axis=1).min())


def build_filtration(dist, max_dim: int, t_max: float | None = None,
                     max_simplices: int = DEFAULT_MAX_SIMPLICES) -> Filtration:
    """Clique filtration of every simplex with diameter <= t_max and dim <= max_dim.

    ``t_max`` defaults to the enclosing radius, past which the complex is a
    cone and no finite pair changes.
    """
    d = _as_array(dist)
    if max_dim < 0:
        raise ValueError("max_dim must be non-negative")
    if t_max is None:
        t_max = enclosing_radius(d)
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    n = d.shape[0]
    if n == 0:
        raise ValueError("empty distance matrix")

    adj = d <= t_max
    np.fill_diagonal(adj, False)
    starts, nbrs = _kernels.neighbor_lists(adj)

    layers = [np.arange(n, dtype=np.int64).reshape(-1, 1)]
    layer_vals = [np.zeros(n)]
    total = n
    for p in range(1, max_dim + 1):
        prev = layers[-1]
        if prev.shape[0] == 0:
            break
        budget = max_simplices - total
        cnt = _kernels.count_cofaces(prev, adj, starts, nbrs, budget)
        if cnt > budget:
            raise FiltrationTooLarge(
                f"more than {max_simplices} simplexes up to dimension {p} "
                f"({n} vertices, t_max={t_max:.6g})"
            )
        simp, vals = _kernels.fill_cofaces(prev, layer_vals[-1], d, adj, starts, nbrs, cnt)
        layers.append(simp)
        layer_vals.append(vals)
        total += cnt

    width = max_dim + 1
    S = total
    vertices = np.full((S, width), -1, dtype=np.int64)
    dims = np.empty(S, dtype=np.int64)
    values = np.empty(S)
    lex = np.empty(S, dtype=np.int64)
    k = 0
    for p, (simp, vals) in enumerate(zip(layers, layer_vals)):
        c = simp.shape[0]
        vertices[k:k + c, : p + 1] = simp
        dims[k:k + c] = p
        values[k:k + c] = vals
        lex[k:k + c] = np.arange(c)  # enumeration order is lexicographic within a dim
        k += c
    order = np.lexsort((lex, dims, values))
    return Filtration(vertices[order], dims[order], values[order], max_dim, float(t_max), n)


def _binomials(n: int, k: int) -> np.ndarray:
    table = np.zeros((n + 1, k + 1), dtype=np.int64)
    table[:, 0] = 1
    for i in range(1, n + 1):
        table[i, 1:] = table[i - 1, 1:] + table[i - 1, :-1]
    return table


def _face_positions(filt: Filtration) -> np.ndarray:
    S, width = filt.vertices.shape
    if S == 0 or width == 1:
        return np.full((S, width), -1, dtype=np.int64)
    binom = _binomials(filt.n_vertices, width)
    return _kernels.face_positions(filt.vertices, filt.dims, binom)


def _colex_keys(verts: np.ndarray, binom: np.ndarray) -> np.ndarray:
    keys = np.zeros(verts.shape[0], dtype=np.int64)
    for i in range(verts.shape[1]):
        keys += binom[verts[:, i], i + 1]
    return keys
