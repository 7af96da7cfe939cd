"""Reference solutions for one-dimensional (or segment-embedded) connections.

A scalar connection satisfies ``|U_x|^2 = 2 W(U)``, so its energy is the line
integral of ``sqrt(2 W)`` between the wells and its inverse profile follows
from ``dx/du = 1 / sqrt(2 W(u))``. Both are evaluated here by adaptive
quadrature, independently of the discrete action machinery.

Potentials of dimension ``N > 1`` are restricted to the straight segment
``[a-, a+]``; the results are exact when the connection lies on that segment
(decoupled embeddings such as ``planar-embedded``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import NegativePotentialOnSegment, NonMonotone
from .path import DiscretePath, Grid, sample_function
from .potential import Potential

QUARTIC_ENERGY = 2.0 * math.sqrt(2.0) / 3.0

QUAD_EPSABS = 1e-10
NEGATIVE_TOL = 1e-14
ZERO_TOL = 1e-12
SCAN_POINTS = 20_001


class Method(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    EQUIPARTITION_QUADRATURE = "EquipartitionQuadrature"
    PHASE_PLANE = "PhasePlane"


@dataclass
class OracleResult:
    energy: float
    profile: Callable[[np.ndarray], np.ndarray] | None
    method: Method
    span: tuple[float, float] = (-math.inf, math.inf)
    delta: float = 0.0
    minus: np.ndarray | None = None
    plus: np.ndarray | None = None

    def __post_init__(self):
        if not self.energy >= 0:
            raise ValueError(f"oracle energy must be nonnegative, got {self.energy}")

    def to_path(self, grid: Grid) -> DiscretePath:
        """Sample the profile on ``grid``; nodes outside the covered span take ``a-``/``a+``."""
        if self.profile is None:
            raise ValueError("this oracle result carries no profile")
        lo, hi = self.span

        def f(x):
            v = np.empty((len(x), len(self.minus)))
            inside = (x >= lo) & (x <= hi)
            v[x < lo] = self.minus
            v[x > hi] = self.plus
            v[inside] = self.profile(x[inside])
            return v

        return sample_function(grid, f, self.minus, self.plus)


@dataclass(frozen=True)
class _Segment:
    """Arc-length restriction ``s -> W(a- + s e)`` for ``s`` in ``[0, length]``."""
    W: Callable[[float], float]
    length: float
    start: np.ndarray
    direction: np.ndarray

    def embed(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.start + s[..., None] * self.direction


def _segment(W, a_minus, a_plus) -> _Segment:
    if isinstance(W, Potential):
        a_minus = W.minus_minimum if a_minus is None else a_minus
        a_plus = W.plus_minimum if a_plus is None else a_plus
        evaluate = W.eval
        vector = True
    else:
        if a_minus is None or a_plus is None:
            raise ValueError("a_minus and a_plus are required for a plain callable")
        evaluate = W
        vector = False
    a = np.atleast_1d(np.asarray(a_minus, dtype=float))
    b = np.atleast_1d(np.asarray(a_plus, dtype=float))
    length = float(np.linalg.norm(b - a))
    e = (b - a) / length if length > 0 else np.zeros_like(a)

    if vector:
        def w(s):
            return float(evaluate(a + s * e))
    else:
        def w(s):
            return float(evaluate(float(a[0] + s * e[0])))

    return _Segment(w, length, a, e)


def _scan(seg: _Segment, lo: float, hi: float, n: int = SCAN_POINTS) -> tuple[np.ndarray, np.ndarray]:
    s = np.linspace(lo, hi, n)
    return s, np.array([seg.W(t) for t in s])


def _energy(seg: _Segment, lo: float, hi: float) -> float:
    s, w = _scan(seg, lo, hi)
    worst = int(np.argmin(w))
    if w[worst] < -NEGATIVE_TOL:
        raise NegativePotentialOnSegment(f"W = {w[worst]:.3g} < 0 at arc length {s[worst]:.6g}")
    if hi <= lo:
        return 0.0
    value, _ = quad(lambda t: math.sqrt(2.0 * max(seg.W(t), 0.0)), lo, hi,
                    epsabs=QUAD_EPSABS, epsrel=1e-12, limit=500)
    return float(value)


def scalar_energy_quadrature(W, a_minus=None, a_plus=None) -> float:
    """Integral of ``sqrt(2 W)`` over the segment from ``a_minus`` to ``a_plus``.

    ``W`` is either a :class:`Potential` (wells default to its minima) or a
    scalar callable. Raises :class:`NegativePotentialOnSegment` if ``W`` dips
    below zero on the segment.
    """
    seg = _segment(W, a_minus, a_plus)
    return _energy(seg, 0.0, seg.length)


def closed_form_quartic(x):
    """``tanh(x / sqrt 2)``, the connection of ``W = (1 - u^2)^2 / 4`` from -1 to 1."""
    return np.tanh(np.asarray(x, dtype=float) / math.sqrt(2.0))


def closed_form_result() -> OracleResult:
    return OracleResult(QUARTIC_ENERGY, lambda x: closed_form_quartic(x)[..., None], Method.CLOSED_FORM,
                        minus=np.array([-1.0]), plus=np.array([1.0]))


def _interior_minimum(seg: _Segment, lo: float, hi: float) -> tuple[float, float]:
    s, w = _scan(seg, lo, hi)
    k = int(np.argmin(w))
    a, b = s[max(k - 1, 0)], s[min(k + 1, len(s) - 1)]
    if b > a:
        res = minimize_scalar(seg.W, bounds=(a, b), method="bounded", options={"xatol": 1e-14})
        if res.fun < w[k]:
            return float(res.x), float(res.fun)
    return float(s[k]), float(w[k])


def _cluster_nodes(length: float, lo: float, hi: float, anchor: float, per_side: int) -> np.ndarray:
    """Nodes geometric in the distance to the nearer well, so ``x`` is roughly uniform."""
    left = np.geomspace(lo, anchor, per_side)
    right = length - np.geomspace(length - hi, length - anchor, per_side)[::-1]
    nodes = np.unique(np.concatenate([left, [anchor], right]))
    return nodes[(nodes >= lo) & (nodes <= hi)]


def phase_plane_profile(W, a_minus=None, a_plus=None, delta: float = 1e-3,
                        per_side: int = 800) -> OracleResult:
    """Inverse profile ``x(u)`` from ``dx/du = 1/sqrt(2 W(u))``, inverted by a cubic spline.

    The integration runs from ``delta`` past ``a-`` to ``delta`` before ``a+``
    (arc length along the segment) and is anchored with ``x = 0`` at the
    maximum of ``W`` on that range. The reported energy is the quadrature of
    ``sqrt(2 W)`` over the same regularized range.
    """
    if not 0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")
    seg = _segment(W, a_minus, a_plus)
    lo, hi = delta, seg.length - delta
    if hi <= lo:
        raise ValueError("delta leaves no span between the wells")
    s_min, w_min = _interior_minimum(seg, lo, hi)
    if w_min <= ZERO_TOL:
        raise NonMonotone(f"W vanishes inside the segment (W = {w_min:.3g} at arc length {s_min:.6g})")

    s, w = _scan(seg, lo, hi)
    anchor = float(s[int(np.argmax(w))])
    nodes = _cluster_nodes(seg.length, lo, hi, anchor, per_side)

    def rate(t):
        return 1.0 / math.sqrt(2.0 * seg.W(t))

    steps = np.array([quad(rate, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
                      for a, b in zip(nodes[:-1], nodes[1:])])
    x = np.concatenate([[0.0], np.cumsum(steps)])
    x -= x[int(np.searchsorted(nodes, anchor))]
    if not np.all(np.diff(x) > 0):
        raise NonMonotone("inverse profile is not strictly increasing")
    spline = CubicSpline(x, nodes)

    def profile(xq):
        return seg.embed(spline(np.asarray(xq, dtype=float)))

    energy = _energy(seg, lo, hi)
    return OracleResult(energy, profile, Method.PHASE_PLANE, (float(x[0]), float(x[-1])), float(delta),
                        minus=seg.start.copy(), plus=seg.embed(seg.length))


def equipartition_result(W, a_minus=None, a_plus=None) -> OracleResult:
    return OracleResult(scalar_energy_quadrature(W, a_minus, a_plus), None, Method.EQUIPARTITION_QUADRATURE)
