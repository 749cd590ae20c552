"""Seeded synthetic point-cloud samplers.

Every sampler draws from numpy's PCG64 bit generator seeded through a
``SeedSequence(seed, spawn_key=(stream,))`` so different samplers given the
same seed use independent streams.
"""
from __future__ import annotations

import numpy as np

from .geometry import PointCloud

_STREAMS = {"circle": 1, "sphere": 2, "two_circles": 3, "three_circles": 4, "four_circles": 5}

# Placement of the small circle next to the unit circle.  It sits away from
# the grid walls of 2x2, 4x4 and 8x8 partitions of the joint bounding box.
TWO_CIRCLES_SMALL_CENTER = (1.5, 0.125)

# Large circle straddling x = 0 plus two small circles far enough out that a
# split at the bounding-box midline cuts only the large one.
THREE_CIRCLES = (
    # (center, radius, count)
    ((0.0, 0.0), 1.0, 120),
    ((-1.8, 0.8), 0.35, 40),
    ((1.8, -0.8), 0.35, 40),
)

FOUR_CIRCLES = (
    ((-1.2, 1.2), 1.0, 100),
    ((1.2, 1.2), 0.5, 50),
    ((-1.2, -1.2), 0.5, 50),
    ((1.2, -1.2), 1.0, 100),
)


def rng_for(sampler: str, seed: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(_STREAMS[sampler],))
    return np.random.Generator(np.random.PCG64(ss))


def _circle_points(rng, n, radius, center, noise_sd, stratified=False):
    u = rng.uniform(0.0, 1.0, size=n)
    # stratified: one angle per equal arc, jittered uniformly within it
    theta = 2 * np.pi * ((np.arange(n) + u) / n if stratified else u)
    r = np.full(n, float(radius))
    if noise_sd > 0:
        r = r + rng.normal(0.0, noise_sd, size=n)
    c = np.asarray(center, dtype=float)
    return np.column_stack([c[0] + r * np.cos(theta), c[1] + r * np.sin(theta)])


def sample_circle(n: int, radius: float = 1.0, center=(0.0, 0.0), noise_sd: float = 0.0,
                  seed: int = 0) -> PointCloud:
    if n < 1 or radius <= 0 or noise_sd < 0:
        raise ValueError("need n >= 1, radius > 0, noise_sd >= 0")
    return PointCloud(_circle_points(rng_for("circle", seed), n, radius, center, noise_sd))


def sample_sphere(n: int, radius: float = 1.0, seed: int = 0) -> PointCloud:
    if n < 1 or radius <= 0:
        raise ValueError("need n >= 1, radius > 0")
    g = rng_for("sphere", seed).normal(size=(n, 3))
    return PointCloud(radius * g / np.linalg.norm(g, axis=1, keepdims=True))


def two_circles_unbalanced(seed: int = 0, small_center=TWO_CIRCLES_SMALL_CENTER) -> PointCloud:
    """400 points on the unit circle and 13 on a radius-1/30 circle.

    Angles are stratified (one jittered angle per equal arc) so both circles
    carry the same linear density, about 63.7 points per unit arc length, in
    every sample and not only on average.
    """
    rng = rng_for("two_circles", seed)
    big = _circle_points(rng, 400, 1.0, (0.0, 0.0), 0.0, stratified=True)
    small = _circle_points(rng, 13, 1.0 / 30.0, small_center, 0.0, stratified=True)
    return PointCloud(np.vstack([big, small]))


def _circle_union(sampler, spec, noise_sd, seed):
    rng = rng_for(sampler, seed)
    return PointCloud(np.vstack([_circle_points(rng, n, r, c, noise_sd) for c, r, n in spec]))


def three_circles_example(seed: int = 0, noise_sd: float = 0.02, circles=THREE_CIRCLES) -> PointCloud:
    return _circle_union("three_circles", circles, noise_sd, seed)


def four_circles_example(seed: int = 0, noise_sd: float = 0.05, circles=FOUR_CIRCLES) -> PointCloud:
    return _circle_union("four_circles", circles, noise_sd, seed)


GENERATORS = {
    "circle": sample_circle,
    "sphere": sample_sphere,
    "two_circles": two_circles_unbalanced,
    "three_circles": three_circles_example,
    "four_circles": four_circles_example,
}


def generate(name: str, seed: int = 0, **params) -> PointCloud:
    try:
        fn = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    return fn(seed=seed, **params)
