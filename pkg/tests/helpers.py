"""Seeded random geometry used across the test modules."""

import math

import numpy as np

from kleinian.hyperboloid import (
    Geodesic,
    HPoint,
    Isometry,
    base_point,
    mink_inner,
    reorthonormalize,
    translation_along,
)


def random_tangent_at_origin(rng, m):
    u = rng.standard_normal(m + 1)
    u[0] = 0.0
    return u / np.linalg.norm(u)


def random_point(rng, m, spread=1.5):
    u = random_tangent_at_origin(rng, m)
    r = rng.uniform(0.0, spread)
    v = np.zeros(m + 1)
    v[0] = math.cosh(r)
    v += math.sinh(r) * u
    return HPoint(v)


def random_geodesic(rng, m, spread=1.5):
    p = random_point(rng, m, spread)
    d = rng.standard_normal(m + 1)
    d += mink_inner(d, p.v) * p.v  # project onto the tangent space at p
    d = d / math.sqrt(mink_inner(d, d))
    return Geodesic(p, d)


def random_isometry(rng, m, factors=4, spread=1.2):
    g = Isometry(np.eye(m + 1))
    for _ in range(factors):
        axis = random_geodesic(rng, m, spread=1.0)
        g = g.compose(translation_along(axis, rng.uniform(-spread, spread)))
    return reorthonormalize(g)


def segment_direction(a: HPoint, b: HPoint):
    """Unit tangent at a of the geodesic from a toward b."""
    w = b.v + mink_inner(a.v, b.v) * a.v
    return w / math.sqrt(mink_inner(w, w))
