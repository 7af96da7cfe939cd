"""Randomized properties of the discrete action, metrics and projections."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heteroclinic.compactify import shift_nodes, straighten
from heteroclinic.path import (
    DiscretePath,
    Grid,
    action,
    action_gradient,
    cell_kinetic,
    metric_d1pq,
    sup_distance,
)
from heteroclinic.potential import get_potential

GRID = Grid(4.0, 41)
QUARTIC = get_potential("quartic1d")
PLANAR = get_potential("planar-embedded")

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
interior = arrays(np.float64, (GRID.node_count - 2, 1), elements=finite)
exponent = st.floats(1.1, 6.0)


def path_from(inner, minus=(-1.0,), plus=(1.0,)):
    v = np.vstack([np.asarray(minus, float)[None, :], inner, np.asarray(plus, float)[None, :]])
    return DiscretePath(GRID, v, list(minus), list(plus))


@settings(max_examples=60, deadline=None)
@given(interior, interior, interior, exponent, exponent)
def test_metric_axioms(a, b, c, p, q):
    U, V, X = path_from(a), path_from(b), path_from(c)
    d_uv = metric_d1pq(U, V, p, q)
    assert metric_d1pq(U, U, p, q) == 0.0
    assert d_uv >= 0.0
    assert d_uv == metric_d1pq(V, U, p, q)
    assert d_uv <= metric_d1pq(U, X, p, q) + metric_d1pq(X, V, p, q) + 1e-12 * (1 + d_uv)


@settings(max_examples=60, deadline=None)
@given(interior, st.integers(0, GRID.node_count - 1), st.integers(0, GRID.node_count - 1))
def test_straighten_never_raises_kinetic(inner, i, j):
    U = path_from(inner)
    j_a, j_b = min(i, j), max(i, j)
    if j_b - j_a < 2:
        return
    S = straighten(U, j_a, j_b)
    h = GRID.spacing
    assert cell_kinetic(S.values, h).sum() <= cell_kinetic(U.values, h).sum() * (1 + 1e-12)
    # a second pass is a no-op up to rounding of the chord
    assert sup_distance(straighten(S, j_a, j_b), S) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (11, 1), elements=finite), st.integers(-14, 14))
def test_whole_node_shifts_preserve_action_exactly(core, k):
    # a bump of 11 nodes in the middle, tails exactly at the wells
    inner = np.vstack([-np.ones((14, 1)), core, np.ones((14, 1))])
    U = path_from(inner)
    assert action(shift_nodes(U, k), QUARTIC).total == action(U, QUARTIC).total


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (GRID.node_count - 2, 2), elements=st.floats(-2.0, 2.0)), st.integers(1, 39))
def test_gradient_matches_central_differences(inner, j):
    U = path_from(inner, (-1.0, 0.0), (1.0, 0.0))
    g = action_gradient(U, PLANAR)
    step = 1e-6
    for c in range(2):
        up, dn = U.values.copy(), U.values.copy()
        up[j, c] += step
        dn[j, c] -= step
        fd = (action(U.with_values(up), PLANAR).total - action(U.with_values(dn), PLANAR).total) / (2 * step)
        assert abs(fd - g[j, c]) <= 1e-6 * max(1.0, abs(g[j, c]))


@settings(max_examples=60, deadline=None)
@given(interior)
def test_action_is_nonnegative_and_splits(inner):
    a = action(path_from(inner), QUARTIC)
    assert a.kinetic >= 0 and a.potential >= 0
    assert a.total == a.kinetic + a.potential
