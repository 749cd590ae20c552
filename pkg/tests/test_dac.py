import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dacph import datagen
from dacph.dac import (
    MergeError, MergeGroup, PotentialFeature, conservative_estimate, estimate,
    feature_set_distance, make_scheme, max_min_subset, naive_estimate, pointwise_birth,
    pointwise_death, projected_merge, representative_rips_merge, run_dac, subregion_diagrams,
    topological_projection,
)
from dacph.geometry import HyperRect, PointCloud, make_grid_partition, pairwise_distances
from dacph.harness import truth_diagram
from dacph.metrics import bottleneck
from dacph.persistence import compute_diagram

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def pf(rid, idx, pts, birth=0.1, death=0.5, facets=(0,), dim=1):
    return PotentialFeature(rid, idx, dim, birth, death, tuple(pts), frozenset(facets))


def group(*members, gid=0):
    return MergeGroup(gid, members[0].dim, tuple(members))


# --- feature distances and projection ----------------------------------------

def test_feature_set_distance_examples():
    cloud = PointCloud([[0, 0], [3, 4], [1, 0], [1.2, 0], [9, 9]])
    assert feature_set_distance(pf(0, 0, [0]), pf(1, 0, [1]), cloud) == 5.0
    assert feature_set_distance(pf(0, 0, [0, 2]), pf(1, 0, [2, 4]), cloud) == 0.0
    assert feature_set_distance(pf(0, 0, [0, 2]), pf(1, 0, [3, 4]), cloud) == pytest.approx(0.2)


def test_topological_projection():
    scheme = make_grid_partition(HyperRect([0, 0], [1, 1]), (2, 1))
    cloud = PointCloud([[0.3, 0.4], [0.4, 0.7], [0.6, 0.7], [0.3, 1.0]])
    a = topological_projection(pf(0, 0, [0]), cloud, scheme)
    assert np.allclose(a[0], [[0.5, 0.4]])
    left = topological_projection(pf(0, 0, [1]), cloud, scheme)[0]
    right = topological_projection(pf(1, 0, [2]), cloud, scheme)[0]
    assert np.array_equal(left, right)
    # outside the wall's extent: clamped to its edge (nearest point of the wall)
    short = make_grid_partition(HyperRect([0, 0], [1, 0.5]), (2, 1))
    clamp = topological_projection(pf(0, 0, [3]), cloud, short)[0]
    assert np.allclose(clamp, [[0.5, 0.5]])


def test_projected_merge_threshold_and_walls():
    scheme = make_grid_partition(HyperRect([0, 0], [2, 2]), (2, 2))
    cloud = PointCloud([[0.9, 0.5], [1.1, 0.5], [1.1, 1.5], [0.5, 0.9], [1.5, 0.9]])
    # region 0 is the low-low cell; its facet 0 is the x wall (neighbour 2),
    # facet 1 the y wall (neighbour 1).  Features on different walls do not link.
    f0 = pf(0, 0, [3], facets=(1,))
    f1 = pf(2, 0, [4], facets=(0,))
    out = projected_merge([f0, f1], scheme, cloud)
    assert out.groups == [] and len(out.incomplete) == 2
    # same wall, clamped projections 0.5 apart, eps 0.3: ungrouped and flagged
    wall0 = [f.facet_id for f in scheme.facets[0] if f.neighbor_id == 2][0]
    wall2 = [f.facet_id for f in scheme.facets[2] if f.neighbor_id == 0][0]
    g0 = pf(0, 0, [0], facets=(wall0,))
    g1 = pf(2, 0, [2], facets=(wall2,))
    out = projected_merge([g0, g1], scheme, cloud, eps_proj=0.3)
    assert out.groups == [] and sorted(map(tuple, out.incomplete)) == [((0, 0),), ((2, 0),)]
    g2 = pf(2, 0, [1], facets=(wall2,))
    out = projected_merge([g0, g2], scheme, cloud, eps_proj=0.3)
    assert len(out.groups) == 1 and out.groups[0].keys == [(0, 0), (2, 0)]


def test_projected_merge_half_circles():
    cloud = datagen.sample_circle(400, seed=3)
    scheme = make_scheme(cloud, 2)
    regions = subregion_diagrams(cloud, scheme, 1)
    pots = [p for r in regions for p in r.potentials]
    assert len(pots) == 2
    out = projected_merge(pots, scheme, cloud)
    assert len(out.groups) == 1 and len(out.groups[0].members) == 2


# --- estimators --------------------------------------------------------------

def test_pointwise_birth_examples():
    assert pointwise_birth(group(pf(0, 0, [0], 0.1), pf(1, 0, [1], 0.2), pf(2, 0, [2], 0.15))) == 0.2
    assert pointwise_birth(group(pf(0, 0, [0], 0.05))) == 0.05
    assert pointwise_birth(group(pf(0, 0, [0], 0.3), pf(1, 0, [1], 0.3))) == 0.3


def test_conservative_examples():
    g = group(pf(0, 0, [0], 0.1, 0.5), pf(1, 0, [1], 0.2, 0.4))
    assert conservative_estimate(g) == (0.1, 0.5)
    assert conservative_estimate(group(pf(0, 0, [0], 0.2, 0.4))) == (0.2, 0.4)
    assert conservative_estimate(group(pf(0, 0, [0], 0.2, 0.4), pf(1, 0, [1], 0.2, 0.4))) == (0.2, 0.4)


def test_pointwise_death_square():
    cloud = PointCloud(SQUARE)
    g = group(pf(0, 0, [0, 1, 2, 3]))
    assert pointwise_death(g, cloud, 1) == pytest.approx(math.sqrt(2))
    sub = max_min_subset(pairwise_distances(SQUARE), 3)
    assert len(sub) == 3 and pairwise_distances(SQUARE[sub]).max() == pytest.approx(math.sqrt(2))


def test_pointwise_death_forced_subset():
    cloud = PointCloud([[0, 0], [2, 0], [0, 1]])
    assert pointwise_death(group(pf(0, 0, [0, 1, 2])), cloud, 1) == pytest.approx(math.sqrt(5))
    with pytest.raises(MergeError):
        pointwise_death(group(pf(0, 0, [0, 1])), cloud, 1)


@pytest.mark.parametrize("exact_cap", [100, 0])
def test_pointwise_death_circle(exact_cap):
    cloud = datagen.sample_circle(60, seed=4)
    g = group(pf(0, 0, list(range(60))))
    d = pointwise_death(g, cloud, 1, exact_cap=exact_cap)
    assert d == pytest.approx(math.sqrt(3), abs=0.05)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 14), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_clique_search_finds_the_optimum(n, size, seed):
    if size > n:
        return
    d = pairwise_distances(np.random.default_rng(seed).uniform(size=(n, 2)))

    def score(s):
        return d[np.ix_(s, s)][np.triu_indices(size, 1)].min()

    exact = max_min_subset(d, size, exact_cap=100)
    fast = max_min_subset(d, size, exact_cap=0)
    assert score(fast) == score(exact)


def test_naive_estimate_single_complete_feature():
    cloud = PointCloud(SQUARE)
    b, d = naive_estimate(group(pf(0, 0, [0, 1, 2, 3], 1.0, math.sqrt(2))), cloud, 1)
    assert (b, d) == (1.0, math.sqrt(2))
    with pytest.raises(MergeError):
        naive_estimate(group(pf(0, 0, [0, 1])), cloud, 1)


def test_naive_estimate_two_half_arcs():
    cloud = datagen.sample_circle(200, seed=6)
    upper = np.flatnonzero(cloud.points[:, 1] >= 0)
    lower = np.flatnonzero(cloud.points[:, 1] < 0)
    g = group(pf(0, 0, upper), pf(1, 0, lower))
    b, d = naive_estimate(g, cloud, 1)
    full = compute_diagram(pairwise_distances(cloud.points), 1).restrict(1)
    i = int(np.argmax(full.persistence))
    theta = np.sort(np.arctan2(cloud.points[:, 1], cloud.points[:, 0]))
    gap = 2 * np.sin(np.diff(np.concatenate([theta, [theta[0] + 2 * np.pi]])).max() / 2)
    assert abs(b - full.births[i]) <= 2 * gap and abs(d - full.deaths[i]) <= 2 * gap


def test_estimator_ordering():
    cloud = datagen.sample_circle(400, seed=8)
    res = run_dac(cloud, 1, 16)
    assert res.merged
    for f in res.merged:
        g = f.group
        pb = pointwise_birth(g)
        cb, cd = conservative_estimate(g)
        nb, nd = naive_estimate(g, cloud, 1)
        assert np.all(pb >= g.births)
        assert cb <= nb
        assert np.all(cd >= g.deaths)


# --- pipeline ----------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.sampled_from([2, 3]), st.integers(0, 2**32 - 1))
def test_single_region_equals_full_diagram(n, D, seed):
    cloud = PointCloud(np.random.default_rng(seed).uniform(size=(n, D)))
    res = run_dac(cloud, 1, 1)
    full = compute_diagram(pairwise_distances(cloud.points), 1)
    assert res.to_diagram().to_csv() == full.to_csv()
    assert res.report["potential_count"] == 0 and not res.merged


def _circle_in_quadrant():
    circle = datagen.sample_circle(40, radius=0.08, center=(0.25, 0.25), seed=1).points
    corners = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    return PointCloud(np.vstack([circle, corners]))


def test_circle_inside_one_region():
    cloud = _circle_in_quadrant()
    scheme = make_grid_partition(HyperRect([0, 0], [1, 1]), (2, 2))
    # below t_max = 0.15 no point reaches a wall (the circle is 0.17 away)
    regions = subregion_diagrams(cloud, scheme, 1, t_max=0.15)
    assert sum(len(r.potentials) for r in regions) == 0
    h1 = [f for r in regions for f in r.complete.features if f[0] == 1]
    full = compute_diagram(pairwise_distances(cloud.points), 1).restrict(1)
    main = [f for f in h1 if f[2] - f[1] > 0.05]
    assert len(main) == 1
    # complete-feature exactness: identical birth and death
    i = int(np.argmax(full.persistence))
    assert main[0][1:] == (full.births[i], full.deaths[i])


def test_rips_merge_circle_grid():
    cloud = datagen.sample_circle(400, seed=0)
    res = run_dac(cloud, 1, 16)
    assert res.report["merge_method"] == "rips"
    assert res.report["potential_count"] >= 4
    assert len(res.merged) == 1
    assert len(res.merged[0].group.members) == res.report["potential_count"]
    truth = truth_diagram(cloud, 1)
    assert bottleneck(res.to_diagram(), truth, 1) < 0.03


def test_rips_merge_two_circles():
    a = datagen.sample_circle(300, center=(-1.5, 0.0), seed=1).points
    b = datagen.sample_circle(300, center=(1.5, 0.0), seed=2).points
    cloud = PointCloud(np.vstack([a, b]))
    regions = subregion_diagrams(cloud, make_scheme(cloud, 16), 1)
    pots = [p for r in regions for p in r.potentials]
    out = representative_rips_merge(pots, 1, cloud)
    assert len(out.groups) == 2
    for g in out.groups:
        sides = {bool(np.all(cloud.points[list(p.rep_points)][:, 0] < 0)) for p in g.members}
        assert len(sides) == 1
        assert len(g.members) >= 4


def test_rips_merge_needs_enough_potentials():
    cloud = PointCloud(SQUARE)
    out = representative_rips_merge([pf(0, 0, [0]), pf(1, 0, [1])], 1, cloud)
    assert out.groups == [] and out.diagnostics


def test_three_circles_two_regions():
    cloud = datagen.three_circles_example(0)
    truth = truth_diagram(cloud, 1)
    res = run_dac(cloud, 1, 2, estimator="naive")
    assert res.report["merge_method"] == "projected"
    kinds = [r[3] for r in res.rows() if r[0] == 1 and r[2] - r[1] > 0.1]
    assert sorted(kinds) == ["complete", "complete", "merged"]
    sig_truth = truth.restrict(1)
    assert int(np.sum(sig_truth.persistence > 0.1)) == 3
    # ripser works in float32, hence the tolerance
    assert bottleneck(res.to_diagram(), truth, 1) < 1e-6


def test_naive_pool_includes_birth_cycles():
    cloud = datagen.sample_circle(200, seed=3)
    res = run_dac(cloud, 1, 4, estimator="naive")
    (f,) = res.merged
    for p in f.group.members:
        assert len(p.birth_points) >= 3
    # with the birth cycles every arc point is pooled, so the rerun matches the full data
    assert set(f.group.pooled_points) == set(range(cloud.n))
    assert bottleneck(res.to_diagram(), truth_diagram(cloud, 1), 1) < 1e-6
    # other estimators leave the birth cycles out
    assert all(p.birth_points == () for p in run_dac(cloud, 1, 4).merged[0].group.members)


def test_merge_groups_are_disjoint():
    for seed in range(3):
        cloud = datagen.two_circles_unbalanced(seed)
        for m in (4, 16, 64):
            res = run_dac(cloud, 1, m)
            seen = [tuple(k) for g in res.report["groups"] for k in g["members"]]
            assert len(seen) == len(set(seen))


def test_threads_do_not_change_output():
    cloud = datagen.sample_circle(300, seed=2)
    a = run_dac(cloud, 1, 16, threads=1)
    b = run_dac(cloud, 1, 16, threads=4)
    assert a.rows() == b.rows()


def test_rows_and_estimators():
    cloud = datagen.sample_circle(200, seed=5)
    for est in ("naive", "pointwise", "conservative"):
        res = run_dac(cloud, 1, 4, estimator=est)
        kinds = {r[3] for r in res.rows()}
        assert "merged" in kinds
        for r in res.rows():
            assert r[2] > r[1]
    with pytest.raises(ValueError):
        run_dac(cloud, 1, 4, estimator="best")
    with pytest.raises(ValueError):
        estimate(group(pf(0, 0, [0, 1, 2])), cloud, 1, "best")


def test_empty_region_warns():
    cloud = PointCloud([[0.0, 0.0], [1.0, 1.0], [0.1, 0.0]])
    res = run_dac(cloud, 1, 4)
    assert any("empty" in w for w in res.report["warnings"])
