"""Independent brute-force references used by the tests.

Nothing here imports the package's filtration, reduction or matching code.
"""
import itertools
import math

import numpy as np


def brute_simplices(dist, max_dim, t_max):
    """Every vertex subset of size <= max_dim+1 with diameter <= t_max,
    sorted by (value, dim, vertex tuple)."""
    n = len(dist)
    out = []
    for size in range(1, max_dim + 2):
        for sub in itertools.combinations(range(n), size):
            val = max((dist[a][b] for a, b in itertools.combinations(sub, 2)), default=0.0)
            if val <= t_max:
                out.append((val, size - 1, sub))
    out.sort()
    return out


def dense_diagram(dist, max_dim, t_max):
    """Diagram of dims 0..max_dim-1 via a dense Z/2 boundary matrix reduced by
    plain Gaussian column elimination."""
    simp = brute_simplices(dist, max_dim, t_max)
    index = {s[2]: i for i, s in enumerate(simp)}
    N = len(simp)
    M = np.zeros((N, N), dtype=np.uint8)
    for j, (_, d, verts) in enumerate(simp):
        if d == 0:
            continue
        for face in itertools.combinations(verts, d):
            M[index[face], j] = 1

    def low(col):
        nz = np.flatnonzero(M[:, col])
        return nz[-1] if nz.size else -1

    lows = {}
    for j in range(N):
        lo = low(j)
        while lo >= 0 and lo in lows:
            M[:, j] ^= M[:, lows[lo]]
            lo = low(j)
        if lo >= 0:
            lows[lo] = j
    paired = set(lows) | set(lows.values())
    feats = []
    for i, j in lows.items():
        d = simp[i][1]
        if d < max_dim and simp[j][0] > simp[i][0]:
            feats.append((d, simp[i][0], simp[j][0]))
    for i in range(N):
        if i not in paired and simp[i][1] < max(max_dim, 1):
            feats.append((simp[i][1], simp[i][0], math.inf))
    return sorted(feats)


def euler_characteristic(dist, max_dim, t):
    return sum((-1) ** d for _, d, _ in brute_simplices(dist, max_dim, t))


def _cost(p, q):
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def exhaustive_bottleneck(A, B):
    """Bottleneck of two finite point lists by trying every partial injection
    of A into B (unmatched points go to the diagonal)."""
    A = [tuple(map(float, p)) for p in A]
    B = [tuple(map(float, p)) for p in B]
    best = math.inf
    for k in range(min(len(A), len(B)) + 1):
        for As in itertools.combinations(range(len(A)), k):
            for Bs in itertools.permutations(range(len(B)), k):
                c = 0.0
                for i, j in zip(As, Bs):
                    c = max(c, _cost(A[i], B[j]))
                for i in set(range(len(A))) - set(As):
                    c = max(c, (A[i][1] - A[i][0]) / 2)
                for j in set(range(len(B))) - set(Bs):
                    c = max(c, (B[j][1] - B[j][0]) / 2)
                best = min(best, c)
    return best
