"""Bottleneck distance between persistence diagrams."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .persistence import PersistenceDiagram

DIAGONAL = -1


@dataclass
class Matching:
    """Optimal matching of finite features; ``DIAGONAL`` marks a diagonal partner."""

    pairs: list[tuple[int, int]]
    cost: float


def _finite_points(dgm, dim):
    if isinstance(dgm, PersistenceDiagram):
        sub = dgm.restrict(dim)
        b, d = sub.births, sub.deaths
    else:
        arr = np.asarray(dgm, dtype=float).reshape(-1, 2)
        b, d = arr[:, 0], arr[:, 1]
    fin = np.isfinite(d)
    return np.stack([b[fin], d[fin]], axis=1), np.sort(b[~fin])


def _feasible(A, B, eps, return_match=False):
    """Perfect matching of the diagonal-augmented bipartite graph using only
    edges of cost <= eps."""
    n1, n2 = len(A), len(B)
    N = n1 + n2
    if N == 0:
        return (True, []) if return_match else True
    rows, cols = [], []
    if n1 and n2:
        linf = np.maximum(np.abs(A[:, None, 0] - B[None, :, 0]), np.abs(A[:, None, 1] - B[None, :, 1]))
        i, j = np.nonzero(linf <= eps)
        rows.append(i)
        cols.append(j)
    ha = (A[:, 1] - A[:, 0]) / 2
    hb = (B[:, 1] - B[:, 0]) / 2
    # left a_i -> its own diagonal copy on the right (column n2 + i)
    i = np.flatnonzero(ha <= eps)
    rows.append(i)
    cols.append(n2 + i)
    # left diagonal copy of b_j (row n1 + j) -> b_j
    j = np.flatnonzero(hb <= eps)
    rows.append(n1 + j)
    cols.append(j)
    # diagonal-to-diagonal is free
    if n1 and n2:
        dj, di = np.meshgrid(np.arange(n2), np.arange(n1), indexing="ij")
        rows.append(n1 + dj.ravel())
        cols.append(n2 + di.ravel())
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    g = csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(N, N))
    match = maximum_bipartite_matching(g, perm_type="column")
    ok = bool(np.all(match >= 0))
    if not return_match:
        return ok
    pairs = []
    for i in range(n1):
        j = int(match[i])
        pairs.append((i, j if j < n2 else DIAGONAL))
    for j in range(n2):
        if match[n1 + j] == j:
            pairs.append((DIAGONAL, j))
    return ok, pairs


def bottleneck_matching(D1, D2, dim: int = 1) -> Matching:
    A, infA = _finite_points(D1, dim)
    B, infB = _finite_points(D2, dim)
    if infA.size != infB.size:
        return Matching([], float("inf"))
    inf_cost = float(np.max(np.abs(infA - infB))) if infA.size else 0.0

    cands = [np.array([0.0]), (A[:, 1] - A[:, 0]) / 2, (B[:, 1] - B[:, 0]) / 2]
    if len(A) and len(B):
        cands.append(np.maximum(np.abs(A[:, None, 0] - B[None, :, 0]),
                                np.abs(A[:, None, 1] - B[None, :, 1])).ravel())
    cand = np.unique(np.concatenate(cands))
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(A, B, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    _, pairs = _feasible(A, B, cand[lo], return_match=True)
    return Matching(pairs, max(float(cand[lo]), inf_cost))


def bottleneck(D1, D2, dim: int = 1) -> float:
    """Bottleneck distance between the dim-``dim`` parts of two diagrams.

    Diagrams may be ``PersistenceDiagram`` objects or (n, 2) birth/death arrays.
    Infinite features must agree in number (otherwise the distance is inf) and
    are matched in birth order.
    """
    return bottleneck_matching(D1, D2, dim).cost
