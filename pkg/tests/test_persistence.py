import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dacph.geometry import pairwise_distances
from dacph.persistence import (
    MalformedFiltration, PersistenceDiagram, collapsed_rips_diagram, compute_diagram, diagram,
    grown_cutoff_diagram, reduce, representative_cycles, ripser_diagram,
)
from dacph.rips import Filtration, build_filtration

from oracles import dense_diagram, euler_characteristic

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
R2 = math.sqrt(2)


def _full(points, max_hom_dim=1):
    d = pairwise_distances(np.asarray(points, dtype=float))
    f = build_filtration(d, max_hom_dim + 1, math.inf)
    red = reduce(f)
    return f, red, diagram(red, f)


def test_two_points():
    _, _, dgm = _full([[0, 0], [1, 0]], 0)
    assert dgm.features == [(0, 0.0, 1.0), (0, 0.0, math.inf)]


def test_two_points_younger_vertex_dies():
    f, red, dgm = _full([[0, 0], [1, 0]], 0)
    fin = dgm.restrict(0, finite=True)
    assert f[int(fin.birth_index[0])].vertices == (1,)
    cyc = representative_cycles(red, f, 0, dgm)
    assert [sorted(c.vertex_ids) for c in cyc] == [[1], [0]]


def test_equilateral_triangle_has_no_loop():
    d = np.ones((3, 3))
    np.fill_diagonal(d, 0)
    f = build_filtration(d, 2, 2.0)
    dgm = diagram(reduce(f), f)
    assert dgm.features == [(0, 0.0, 1.0), (0, 0.0, 1.0), (0, 0.0, math.inf)]


def test_square_diagram():
    f, red, dgm = _full(SQUARE)
    assert dgm.features == [(0, 0.0, 1.0)] * 3 + [(0, 0.0, math.inf), (1, 1.0, R2)]
    cyc = representative_cycles(red, f, 1, dgm)
    assert len(cyc) == 1 and cyc[0].vertex_ids == frozenset(range(4))


def test_single_vertex_and_far_clusters():
    f = build_filtration(np.zeros((1, 1)), 2)
    assert diagram(reduce(f), f).features == [(0, 0.0, math.inf)]
    pts = [[0, 0], [0.1, 0], [100, 0], [100.1, 0]]
    f = build_filtration(pairwise_distances(np.array(pts, float)), 1, 1.0)
    dgm = diagram(reduce(f), f)
    assert sum(1 for r, b, d in dgm.features if math.isinf(d)) == 2


def test_two_squares_have_own_cycles():
    pts = np.vstack([SQUARE, SQUARE + [10.0, 0.0]])
    f = build_filtration(pairwise_distances(pts), 2, 2.0)
    red = reduce(f)
    dgm = diagram(red, f)
    cyc = representative_cycles(red, f, 1, dgm)
    assert sorted(sorted(c.vertex_ids) for c in cyc) == [[0, 1, 2, 3], [4, 5, 6, 7]]


def test_essential_cycle_representative():
    # the loop never fills below t_max, so it is an infinite feature
    f = build_filtration(pairwise_distances(SQUARE), 2, 1.2)
    red = reduce(f)
    dgm = diagram(red, f)
    assert (1, 1.0, math.inf) in dgm.features
    cyc = representative_cycles(red, f, 1, dgm)
    assert cyc[0].vertex_ids == frozenset(range(4))
    # the chain is a cycle: every vertex has even degree
    deg = np.zeros(4, int)
    for s in cyc[0].simplices:
        for v in f[s].vertices:
            deg[v] += 1
    assert np.all(deg % 2 == 0)


def test_malformed_filtration_rejected():
    f = build_filtration(pairwise_distances(SQUARE), 2, R2)
    bad = Filtration(f.vertices[::-1].copy(), f.dims[::-1].copy(), f.values[::-1].copy(),
                     f.max_dim, f.t_max, f.n_vertices)
    with pytest.raises(MalformedFiltration):
        reduce(bad)


def test_csv_round_trip(tmp_path):
    dgm = PersistenceDiagram.from_features([(0, 0.0, math.inf), (0, 0.0, 0.1 + 0.2), (1, 1 / 3, 2 ** 0.5)])
    text = dgm.to_csv()
    assert text.splitlines()[0] == "dim,birth,death"
    assert PersistenceDiagram.from_csv(text) == dgm
    p = tmp_path / "d.csv"
    dgm.to_csv(p)
    back = PersistenceDiagram.from_csv(p)
    assert back.to_csv() == text
    assert PersistenceDiagram.from_records(dgm.to_records()) == dgm


clouds = st.tuples(st.integers(1, 8), st.sampled_from([2, 3]), st.integers(0, 2**32 - 1))


def _cloud(cl):
    n, D, seed = cl
    return np.random.default_rng(seed).uniform(size=(n, D))


@settings(max_examples=80, deadline=None)
@given(clouds, st.integers(0, 2))
def test_matches_dense_oracle(cl, max_hom_dim):
    d = pairwise_distances(_cloud(cl))
    got = compute_diagram(d, max_hom_dim, math.inf).features
    assert sorted(got) == dense_diagram(d, max_hom_dim + 1, math.inf)


@settings(max_examples=40, deadline=None)
@given(clouds)
def test_default_cutoff_loses_nothing(cl):
    d = pairwise_distances(_cloud(cl))
    assert compute_diagram(d, 1) == compute_diagram(d, 1, math.inf)


@settings(max_examples=40, deadline=None)
@given(clouds)
def test_reduction_fixed_point(cl):
    f = build_filtration(pairwise_distances(_cloud(cl)), 3, math.inf)
    red = reduce(f)
    assert red.check_fixed_point()
    # each nonzero column is a boundary of the right dimension with the stated low
    faces = f.boundary()
    for j in np.flatnonzero(red.low >= 0):
        col = red.column(j)
        assert col.max() == red.low[j]
        assert np.all(f.dims[col] == f.dims[j] - 1)


@settings(max_examples=40, deadline=None)
@given(clouds, st.integers(2, 3))
def test_columns_match_plain_left_to_right_reduction(cl, top):
    # top-dimensional columns that end at zero are skipped by the reduction;
    # every column must still equal the textbook pass over a dense matrix
    f = build_filtration(pairwise_distances(_cloud(cl)), top, math.inf)
    red = reduce(f)
    faces = f.boundary()
    S = len(f)
    M = np.zeros((S, S), dtype=np.uint8)
    for j in range(S):
        M[faces[j][faces[j] >= 0], j] = 1
    owner = {}
    for j in range(S):
        while M[:, j].any() and int(np.flatnonzero(M[:, j])[-1]) in owner:
            M[:, j] ^= M[:, owner[int(np.flatnonzero(M[:, j])[-1])]]
        if M[:, j].any():
            owner[int(np.flatnonzero(M[:, j])[-1])] = j
        assert list(np.flatnonzero(M[:, j])) == list(red.column(j))


@settings(max_examples=40, deadline=None)
@given(clouds, st.floats(0.0, 1.5))
def test_euler_characteristic(cl, t):
    # chi of the complex at t equals the alternating count of features alive at t,
    # where the complex is truncated at dim 2 (so H2 is counted as born, never dying)
    d = pairwise_distances(_cloud(cl))
    f = build_filtration(d, 2, math.inf)
    red = reduce(f)
    alive = np.zeros(3, int)
    for b, dd in red.pairs:
        if f.values[b] <= t < f.values[dd]:
            alive[f.dims[b]] += 1
    for e in red.essential(f):
        if f.values[e] <= t:
            alive[f.dims[e]] += 1
    assert alive[0] - alive[1] + alive[2] == euler_characteristic(d, 2, t)


@settings(max_examples=30, deadline=None)
@given(clouds)
def test_representatives_are_cycles(cl):
    f = build_filtration(pairwise_distances(_cloud(cl)), 2, math.inf)
    red = reduce(f)
    dgm = diagram(red, f)
    for c in representative_cycles(red, f, 1, dgm):
        assert c.simplices and c.vertex_ids
        deg = {}
        for s in c.simplices:
            assert f.dims[s] == 1
            for v in f[s].vertices:
                deg[v] = deg.get(v, 0) + 1
        assert all(x % 2 == 0 for x in deg.values())


@settings(max_examples=60, deadline=None)
@given(clouds, st.floats(0.05, 1.5), st.integers(0, 1))
def test_collapsed_route_matches_dense_oracle(cl, t, max_hom_dim):
    d = pairwise_distances(_cloud(cl))
    got = collapsed_rips_diagram(d, max_hom_dim, t).features
    assert sorted(got) == dense_diagram(d, max_hom_dim + 1, t)


def test_grown_cutoff_finds_the_loop():
    d = pairwise_distances(SQUARE)
    # 0.5 is below every edge; growth must pass 1 (loop born) and sqrt(2) (loop dies).
    # The last step lands on the enclosing radius, where ripser works in float32.
    got, want = grown_cutoff_diagram(d, 1, 0.5).features, compute_diagram(d, 1).features
    assert [f[0] for f in got] == [f[0] for f in want]
    assert np.allclose([f[1:] for f in got], [f[1:] for f in want], rtol=1e-6)


def test_agrees_with_ripser():
    rng = np.random.default_rng(11)
    for trial in range(15):
        n = int(rng.integers(10, 60))
        pts = rng.uniform(size=(n, int(rng.integers(2, 4))))
        d = pairwise_distances(pts)
        ours = compute_diagram(d, 1)
        theirs = ripser_diagram(d, 1)
        assert len(ours) == len(theirs)
        assert np.allclose(ours.births, theirs.births, atol=1e-6)
        assert np.allclose(ours.deaths, theirs.deaths, atol=1e-6)


def test_stability_under_perturbation():
    from dacph.metrics import bottleneck

    rng = np.random.default_rng(5)
    pts = rng.uniform(size=(40, 2))
    base = compute_diagram(pairwise_distances(pts), 1)
    for eta in (1e-4, 1e-3, 1e-2):
        moved = pts + rng.uniform(-eta, eta, size=pts.shape) / math.sqrt(2)
        other = compute_diagram(pairwise_distances(moved), 1)
        for dim in (0, 1):
            assert bottleneck(base, other, dim) <= 2 * eta + 1e-12
