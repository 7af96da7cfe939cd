import json

import numpy as np
import pytest

import frozen
from heteroclinic import compactify
from heteroclinic.compactify import (
    audit_measure_bounds,
    center_offset_nodes,
    control_set,
    enforce_interval_structure,
    enforce_localization,
    recenter,
    shift_nodes,
    straighten,
)
from heteroclinic.errors import BoundaryOutside, EmptyControlSet, IndexOrder, ShiftExceedsGrid
from heteroclinic.oracle import closed_form_quartic
from heteroclinic.path import DiscretePath, Grid, action, cell_kinetic, make_affine, sample_function, sup_distance
from heteroclinic.potential import Box, distance_between_levels, get_potential, reflect_potential


def tanh_path(grid, shift=0.0):
    return sample_function(grid, lambda x: closed_form_quartic(x - shift), [-1.0], [1.0])


def test_control_set_examples(quartic, grid20):
    U = tanh_path(grid20)
    top = control_set(U, quartic, 0.25)
    assert top.lambda_minus == 0.0 and top.lambda_plus == 0.0
    cs = control_set(U, quartic, 0.09)
    h = grid20.spacing
    assert abs(cs.lambda_plus - frozen.QUARTIC_LAMBDA_009) <= h
    assert abs(cs.lambda_minus + frozen.QUARTIC_LAMBDA_009) <= h
    assert cs.connected and cs.lambda_minus <= cs.lambda_plus
    j_lo, j_hi = cs.node_index_range
    W = quartic.eval(U.values)
    assert W[j_lo] >= 0.09 and W[j_hi] >= 0.09
    assert W[j_lo - 1] < 0.09 and W[j_hi + 1] < 0.09
    with pytest.raises(EmptyControlSet):
        control_set(U, quartic, 0.3)


def test_control_set_two_bumps(quartic):
    g = Grid(5.0, 11)
    v = np.array([-1, -1, -1, 0, -1, -1, -1, 0, 1, 1, 1.0])
    cs = control_set(DiscretePath(g, v, [-1.0], [1.0]), quartic, 0.09)
    assert not cs.connected
    assert cs.node_index_range == (3, 7)


def compact_tanh(grid, shift=0.0, width=6.0):
    """tanh profile with tails set exactly to the minima beyond ``|x - shift| > width``."""
    def f(x):
        u = closed_form_quartic(x - shift)
        return np.where(x - shift < -width, -1.0, np.where(x - shift > width, 1.0, u))
    return sample_function(grid, f, [-1.0], [1.0])


def test_shift_translation_invariance_is_exact(quartic, grid20):
    U = compact_tanh(grid20, 0.3)
    E = action(U, quartic).total
    for k in (-1300, -1, 1, 5, 300, 1300):
        assert action(shift_nodes(U, k), quartic).total == E
    with pytest.raises(ShiftExceedsGrid):
        shift_nodes(U, grid20.node_count)


def test_recenter_examples(quartic, grid20):
    U = tanh_path(grid20)
    V, shift = recenter(U, quartic, 0.09)
    assert shift == 0.0 and np.array_equal(V.values, U.values)

    S = tanh_path(grid20, 3.0)
    R, shift = recenter(S, quartic, 0.09)
    h = grid20.spacing
    assert abs(shift - 3.0) <= h
    assert sup_distance(R, U) <= h  # within one node of the centered profile
    assert abs(action(R, quartic).total - action(S, quartic).total) <= 1e-6
    cs = control_set(R, quartic, 0.09)
    assert abs(cs.lambda_plus + cs.lambda_minus) <= h


def test_recenter_is_idempotent_and_contains_origin(quartic, grid20, rng):
    for shift in rng.uniform(-8, 8, 10):
        U = tanh_path(grid20, shift)
        R1, _ = recenter(U, quartic, 0.09)
        R2, s2 = recenter(R1, quartic, 0.09)
        assert s2 == 0.0 and np.array_equal(R1.values, R2.values)
        for alpha in (0.09, 0.03, 0.01, 1e-4):
            cs = control_set(R1, quartic, alpha)
            assert cs.lambda_minus <= 0.0 <= cs.lambda_plus


def test_center_offset_rounds_toward_zero():
    cs = compactify.ControlSet(0.1, 0.0, 0.0, (10, 13), True)
    assert center_offset_nodes(cs, 10) == 1
    cs = compactify.ControlSet(0.1, 0.0, 0.0, (7, 10), True)
    assert center_offset_nodes(cs, 10) == -1


def test_recenter_rejects_far_center(quartic, grid20):
    with pytest.raises(ShiftExceedsGrid):
        recenter(tanh_path(grid20, 12.0), quartic, 0.09)


def test_straighten_examples(rng):
    g = Grid(1.0, 21)
    line = DiscretePath(g, g.nodes[:, None], [-1.0], [1.0])
    assert np.allclose(straighten(line, 3, 15).values, line.values, atol=1e-15)
    # chord over the whole grid is the ramp with eps = L (evaluated pointwise)
    bumpy = line.with_values(line.values + 0.1 * rng.standard_normal(line.values.shape))
    full = straighten(bumpy, 0, g.node_count - 1)
    assert np.allclose(full.values[:, 0], g.nodes / g.half_extent, atol=1e-15)
    assert np.array_equal(straighten(full, 0, g.node_count - 1).values, full.values)
    with pytest.raises(IndexOrder):
        straighten(line, 5, 5)
    with pytest.raises(IndexOrder):
        straighten(line, -1, 5)


def test_straighten_decreases_kinetic_term(rng):
    g = Grid.from_spacing(2.0, 0.05)
    h = g.spacing
    base = make_affine(g, [-1.0, 0.0], [1.0, 0.0], 1.0)
    for _ in range(50):
        U = base.with_values(base.values + 0.2 * rng.standard_normal(base.values.shape))
        j_a, j_b = sorted(rng.choice(g.node_count, 2, replace=False))
        if j_b - j_a < 2:
            continue
        S = straighten(U, j_a, j_b)
        before = cell_kinetic(U.values[j_a:j_b + 1], h).sum()
        after = cell_kinetic(S.values[j_a:j_b + 1], h).sum()
        assert after < before
        assert np.array_equal(S.values[:j_a + 1], U.values[:j_a + 1])
        assert np.array_equal(S.values[j_b:], U.values[j_b:])


def dip_path(grid):
    """Crossing to +0.9, back up onto the barrier at 0, then on to +1."""
    x = grid.nodes
    u = np.interp(x, [-grid.half_extent, -2, 0, 1, 2, grid.half_extent], [-1, -1, 0.9, 0.0, 1, 1])
    return DiscretePath(grid, u[:, None], [-1.0], [1.0])


def test_interval_structure_examples(quartic, grid20):
    U = tanh_path(grid20)
    V, changed = enforce_interval_structure(U, quartic, 0.09)
    assert not changed and V is U

    D = dip_path(Grid.from_spacing(5.0, 0.05))
    assert not control_set(D, quartic, 0.09).connected
    S, changed = enforce_interval_structure(D, quartic, 0.09)
    assert changed
    assert action(S, quartic).total < action(D, quartic).total
    assert control_set(S, quartic, 0.09).connected
    # the genuine crossing (minus well to plus well) is left alone
    first = D.grid.nodes <= 0.0
    assert np.array_equal(S.values[first], D.values[first])


def test_localization_examples():
    p = get_potential("noncoercive1d")
    q = reflect_potential(p)
    omega = p.hypothesis.omega
    g = Grid.from_spacing(5.0, 0.05)
    inside = sample_function(g, closed_form_quartic, [-1.0], [1.0])
    V, changed = enforce_localization(inside, omega, q)
    assert not changed and V is inside

    x = g.nodes
    u = np.interp(x, [-5, -1, 0, 1, 2, 5], [-1, -1, 3.0, 1.5, 1, 1])
    out = DiscretePath(g, u[:, None], [-1.0], [1.0])
    S, changed = enforce_localization(out, omega, q)
    assert changed
    assert np.all(omega.contains(S.values))
    assert action(S, q).total < action(out, q).total

    # excursion bracketed by points on the boundary of omega: the chord stays in the closure
    edge = np.interp(x, [-5, -1, -0.05, 0, 0.05, 1, 5], [-1, -1, 2.0, 2.5, 2.0, 1, 1])
    S, changed = enforce_localization(DiscretePath(g, edge[:, None], [-1.0], [1.0]), omega)
    assert changed and np.all(omega.contains(S.values))

    with pytest.raises(BoundaryOutside):
        enforce_localization(inside, Box(np.array([-0.5]), np.array([2.0])))


def test_projections_never_increase_action_in_debug_mode(monkeypatch, quartic, rng):
    monkeypatch.setattr(compactify, "DEBUG", True)
    g = Grid.from_spacing(4.0, 0.05)
    base = dip_path(g)
    for _ in range(20):
        U = base.with_values(base.values + 0.3 * rng.standard_normal(base.values.shape))
        S, _ = enforce_interval_structure(U, quartic, 0.09)
        assert action(S, quartic).total <= action(U, quartic).total


def test_measure_audit_on_minimizer(quartic, quartic_solution):
    path, report = quartic_solution
    M = report.upper_bound_M
    audit = audit_measure_bounds(path, quartic, [0.01, 0.03, 0.09], M)
    assert audit.status == "pass"
    e = [x for x in audit.entries if x.alpha == 0.09][0]
    assert e.lower_bound == pytest.approx(distance_between_levels(quartic, 0.09) ** 2 / (2 * M))
    assert e.lower_bound == pytest.approx(0.5657, abs=1e-4)
    assert e.lower_bound <= e.measure <= e.upper_bound
    doc = json.loads(json.dumps(audit.to_dict()))
    assert {"alpha", "lambda_minus", "lambda_plus", "measure", "lower_bound", "upper_bound", "pass"} <= set(
        doc["entries"][0])


def test_measure_audit_not_applicable_above_m(quartic, grid20):
    steep = make_affine(grid20, [-1.0], [1.0], 0.2)
    M = frozen.QUARTIC_M
    assert action(steep, quartic).total > M
    audit = audit_measure_bounds(steep, quartic, [0.09], M)
    assert audit.status == "NotApplicable" and not audit.passed
