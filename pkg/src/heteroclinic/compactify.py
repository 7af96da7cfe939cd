"""Control sets, recentering and the action-decreasing structural projections.

The control set of a path at level ``alpha`` is the node set where
``W(U) >= alpha``; its first/last nodes are the control times. Recentering
translates the path by whole nodes so the control set at ``alpha0`` becomes
symmetric about ``x = 0``. The two projections replace excursions by chords:

* an excursion above ``alpha`` that leaves and re-enters the *same* convex
  well ``{W <= alpha}+-`` (this is what makes control sets intervals);
* an excursion outside a convex localization region ``omega``.

Both lower the kinetic term (chords minimise the Dirichlet sum) and do not
raise the potential term node by node, so the action cannot increase.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryOutside, EmptyControlSet, IndexOrder, ShiftExceedsGrid
from .path import DiscretePath, action, cell_kinetic
from .potential import ComponentLabel, ConvexRegion, Potential, component_of, distance_between_levels

CONNECT_SLACK = 1e-12

# Re-evaluate the action around every projection and assert it did not grow.
DEBUG = os.environ.get("HETEROCLINIC_DEBUG", "") not in ("", "0")


@dataclass(frozen=True)
class ControlSet:
    alpha: float
    lambda_minus: float
    lambda_plus: float
    node_index_range: tuple[int, int]
    connected: bool

    @property
    def measure(self) -> float:
        return self.lambda_plus - self.lambda_minus

    @property
    def center(self) -> float:
        return 0.5 * (self.lambda_plus + self.lambda_minus)


def control_set(path: DiscretePath, p: Potential, alpha: float) -> ControlSet:
    """Hull ``[lambda-, lambda+]`` of the nodes with ``W(U) >= alpha``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    W = p.eval(path.values)
    idx = np.flatnonzero(W >= alpha)
    if idx.size == 0:
        raise EmptyControlSet(f"no node reaches W >= {alpha}")
    j_lo, j_hi = int(idx[0]), int(idx[-1])
    connected = bool(np.all(W[j_lo:j_hi + 1] >= alpha - CONNECT_SLACK))
    x = path.x
    return ControlSet(float(alpha), float(x[j_lo]), float(x[j_hi]), (j_lo, j_hi), connected)


def shift_nodes(path: DiscretePath, k: int) -> DiscretePath:
    """Translate by ``k`` nodes (``k > 0`` moves the profile right).

    Vacated nodes take the value of the minimum on their side.
    """
    m = path.grid.node_count
    if abs(k) >= m:
        raise ShiftExceedsGrid(f"shift of {k} nodes on a {m}-node grid")
    v = np.empty_like(path.values)
    if k > 0:
        v[:k] = path.minus
        v[k:] = path.values[:m - k]
    elif k < 0:
        v[k:] = path.plus
        v[:k] = path.values[-k:]
    else:
        v[:] = path.values
    return path.with_values(v)


def center_offset_nodes(cs: ControlSet, center_index: int) -> int:
    """Whole-node offset of the control-set center, rounded toward zero."""
    s = cs.node_index_range[0] + cs.node_index_range[1] - 2 * center_index
    return int(s / 2)


def recenter(path: DiscretePath, p: Potential, alpha0: float) -> tuple[DiscretePath, float]:
    """Translate so the control set at ``alpha0`` is centered on ``x = 0``.

    Returns the translated path and the (node-rounded) center that was
    removed; half-node centers round toward zero, which makes the operation
    idempotent.
    """
    cs = control_set(path, p, alpha0)
    grid = path.grid
    if abs(cs.center) > grid.half_extent / 2:
        raise ShiftExceedsGrid(f"control-set center {cs.center} beyond L/2 = {grid.half_extent / 2}")
    k = center_offset_nodes(cs, grid.center_index)
    return shift_nodes(path, -k), k * grid.spacing


def straighten(path: DiscretePath, j_a: int, j_b: int) -> DiscretePath:
    """Replace nodes strictly between ``j_a`` and ``j_b`` by the chord."""
    m = path.grid.node_count
    if not (0 <= j_a < j_b <= m - 1):
        raise IndexOrder(f"need 0 <= j_a < j_b <= {m - 1}, got {j_a}, {j_b}")
    v = path.values.copy()
    _chord(v, j_a, j_b)
    return path.with_values(v)


def _chord(v: np.ndarray, j_a: int, j_b: int) -> None:
    t = (np.arange(j_a + 1, j_b) - j_a) / (j_b - j_a)
    v[j_a + 1:j_b] = v[j_a][None, :] + t[:, None] * (v[j_b] - v[j_a])[None, :]


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal ``[start, stop]`` (inclusive) index runs where ``mask`` is true."""
    if not mask.any():
        return []
    d = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), stops.tolist()))


def _window_action(v, j_a, j_b, h, p):
    """Action carried by cells ``j_a..j_b-1`` and interior nodes of the window."""
    kin = cell_kinetic(v[j_a:j_b + 1], h)
    pot = h * p.eval(v[j_a + 1:j_b])
    return math.fsum(np.concatenate([kin, pot]))


def enforce_interval_structure(path: DiscretePath, p: Potential, alpha: float
                               ) -> tuple[DiscretePath, bool]:
    """Straighten excursions above ``alpha`` that start and end in the same well.

    For each maximal run of nodes with ``W(U) >= alpha`` the bracketing nodes
    are labelled with :func:`component_of`; when both belong to the same well
    the run is replaced by the chord, which stays in that (convex) well.
    A replacement is kept only if the action of its window does not grow, so
    the projection is monotone even for potentials that break convexity.
    """
    W = p.eval(path.values)
    runs = _runs(W >= alpha)
    if not runs:
        return path, False
    v = path.values.copy()
    h = path.grid.spacing
    m = len(v)
    changed = False
    for start, stop in runs:
        j_a, j_b = start - 1, stop + 1
        if j_a < 0 or j_b > m - 1:
            continue
        side_a = component_of(p, v[j_a], alpha)
        if side_a is ComponentLabel.OUTSIDE or component_of(p, v[j_b], alpha) is not side_a:
            continue
        before = _window_action(v, j_a, j_b, h, p)
        saved = v[j_a + 1:j_b].copy()
        _chord(v, j_a, j_b)
        if _window_action(v, j_a, j_b, h, p) <= before:
            changed = True
        else:
            v[j_a + 1:j_b] = saved
    if not changed:
        return path, False
    out = path.with_values(v)
    if DEBUG:
        assert action(out, p).total <= action(path, p).total
    return out, True


def enforce_localization(path: DiscretePath, omega: ConvexRegion, p: Potential | None = None
                         ) -> tuple[DiscretePath, bool]:
    """Replace every run of nodes outside ``omega`` by the chord between its inside neighbours.

    ``p`` is only used for the debug-mode monotonicity assertion.
    """
    for a in (path.minus, path.plus):
        if not bool(omega.contains(a)):
            raise BoundaryOutside(f"boundary value {a.tolist()} is not in omega")
    outside = ~omega.contains(path.values)
    runs = _runs(outside)
    if not runs:
        return path, False
    v = path.values.copy()
    for start, stop in runs:
        _chord(v, start - 1, stop + 1)
    out = path.with_values(v)
    if DEBUG and p is not None:
        assert action(out, p).total <= action(path, p).total
    return out, True


# ---------------------------------------------------------------------------
# Measure-bound audit
# ---------------------------------------------------------------------------

@dataclass
class MeasureEntry:
    alpha: float
    lambda_minus: float
    lambda_plus: float
    measure: float
    lower_bound: float
    upper_bound: float
    centered_pass: bool
    passed: bool
    connected: bool = True

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda_minus": self.lambda_minus,
            "lambda_plus": self.lambda_plus,
            "measure": self.measure,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "centered_pass": self.centered_pass,
            "connected": self.connected,
            "pass": self.passed,
        }


@dataclass
class AuditReport:
    applicable: bool
    action: float
    M: float
    entries: list = field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.applicable and all(e.passed for e in self.entries)

    @property
    def status(self) -> str:
        if not self.applicable:
            return "NotApplicable"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "applicable": self.applicable,
            "action": self.action,
            "M": self.M,
            "note": self.note,
            "entries": [e.to_dict() for e in self.entries],
        }


def audit_measure_bounds(path: DiscretePath, p: Potential, alphas, M: float,
                         distances: dict | None = None) -> AuditReport:
    """Check ``d_a^2/(2M) <= |Lambda^a| <= M/a`` and ``max|lambda+-| <= M/a``.

    Each inequality gets one cell of slack. ``distances`` may supply
    precomputed ``d_alpha`` values keyed by alpha. Paths whose action exceeds
    ``M`` are outside the scope of the bounds and are reported NotApplicable.
    """
    total = action(path, p).total
    if total > M:
        return AuditReport(False, total, M, note=f"action {total:.12g} exceeds M = {M:.12g}")
    h = path.grid.spacing
    report = AuditReport(True, total, M)
    for alpha in alphas:
        alpha = float(alpha)
        d = distances.get(alpha) if distances else None
        if d is None:
            d = distance_between_levels(p, alpha)
        lower = d * d / (2 * M)
        upper = M / alpha
        try:
            cs = control_set(path, p, alpha)
        except EmptyControlSet:
            report.entries.append(MeasureEntry(alpha, math.nan, math.nan, 0.0, lower, upper, False, False, False))
            continue
        measure = cs.measure
        centered = max(abs(cs.lambda_plus), abs(cs.lambda_minus)) <= upper + h
        ok = (lower - h <= measure <= upper + h) and centered
        report.entries.append(MeasureEntry(alpha, cs.lambda_minus, cs.lambda_plus, measure, lower, upper,
                                           centered, ok, cs.connected))
    return report
