"""Grid-sampled candidate connections and the discrete action.

The kinetic term uses forward differences and the potential term the
trapezoid rule; with that pairing :func:`action_gradient` is the exact
gradient of :func:`action`. Sums go through ``math.fsum`` so every norm and
action is correctly rounded, independent of where zero terms sit; whole-node
translations with ``a+-``-filled tails therefore leave the action bitwise
unchanged.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .errors import DimensionMismatch, EpsilonTooLarge, GridMismatch, SchemaError
from .potential import Potential, segment_sup


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-L, L]`` with an odd node count, so ``x = 0`` is a node."""

    half_extent: float
    node_count: int

    def __post_init__(self):
        if not self.half_extent > 0:
            raise ValueError("half_extent must be positive")
        if self.node_count < 3 or self.node_count % 2 == 0:
            raise ValueError("node_count must be odd")

    @classmethod
    def from_spacing(cls, half_extent: float, spacing: float) -> "Grid":
        cells = 2.0 * half_extent / spacing
        n = int(round(cells))
        if abs(cells - n) > 1e-9 * max(1.0, cells):
            raise ValueError(f"2L/h = {cells} is not an integer")
        return cls(half_extent, n + 1)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / (self.node_count - 1)

    @property
    def center_index(self) -> int:
        return (self.node_count - 1) // 2

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.node_count) - self.center_index) * self.spacing

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.node_count, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


@dataclass
class DiscretePath:
    """Node values of a candidate connection, clamped to ``a-``/``a+`` at the ends."""

    grid: Grid
    values: np.ndarray
    minus: np.ndarray
    plus: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        self.minus = np.asarray(self.minus, dtype=float).reshape(self.values.shape[1])
        self.plus = np.asarray(self.plus, dtype=float).reshape(self.values.shape[1])
        if self.values.shape[0] != self.grid.node_count:
            raise DimensionMismatch(f"{self.values.shape[0]} values for {self.grid.node_count} nodes")
        if not np.array_equal(self.values[0], self.minus) or not np.array_equal(self.values[-1], self.plus):
            raise ValueError("end values must equal the boundary minima exactly")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("path has non-finite values")

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "DiscretePath":
        """New path on the same grid; end nodes are re-clamped."""
        v = np.array(values, dtype=float, copy=True)
        if v.ndim == 1:
            v = v[:, None]
        v[0] = self.minus
        v[-1] = self.plus
        return DiscretePath(self.grid, v, self.minus, self.plus)

    def copy(self) -> "DiscretePath":
        return DiscretePath(self.grid, self.values.copy(), self.minus.copy(), self.plus.copy())


@dataclass(frozen=True)
class ActionBreakdown:
    kinetic: float
    potential: float
    total: float

    def to_dict(self) -> dict:
        return {"kinetic": self.kinetic, "potential": self.potential, "total": self.total}


def _check_dim(path: DiscretePath, p: Potential) -> None:
    if path.dimension != p.dimension:
        raise DimensionMismatch(f"path has N={path.dimension}, potential has N={p.dimension}")


def make_affine(grid: Grid, minus, plus, epsilon: float) -> DiscretePath:
    """Linear ramp from ``a-`` at ``x = -eps`` to ``a+`` at ``x = eps``, constant outside."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if epsilon >= grid.half_extent:
        raise EpsilonTooLarge(f"epsilon={epsilon} >= L={grid.half_extent}")
    minus = np.atleast_1d(np.asarray(minus, dtype=float))
    plus = np.atleast_1d(np.asarray(plus, dtype=float))
    x = grid.nodes
    wm = np.clip((epsilon - x) / (2 * epsilon), 0.0, 1.0)[:, None]
    wp = np.clip((epsilon + x) / (2 * epsilon), 0.0, 1.0)[:, None]
    values = wm * minus[None, :] + wp * plus[None, :]
    values[x <= -epsilon] = minus
    values[x >= epsilon] = plus
    return DiscretePath(grid, values, minus, plus)


def cell_kinetic(values: np.ndarray, h: float) -> np.ndarray:
    """Per-cell kinetic contributions ``0.5 |u_{j+1} - u_j|^2 / h``."""
    d = np.diff(values, axis=0)
    return 0.5 * np.sum(d * d, axis=1) / h


def action(path: DiscretePath, p: Potential) -> ActionBreakdown:
    """Discrete action ``sum 0.5|du|^2/h + trapezoid(W(u))``."""
    _check_dim(path, p)
    h = path.grid.spacing
    kin = math.fsum(cell_kinetic(path.values, h))
    pot = math.fsum(path.grid.trapezoid_weights() * p.eval(path.values))
    return ActionBreakdown(kin, pot, kin + pot)


def affine_action_bounds(p: Potential, epsilon: float) -> tuple[float, float]:
    """Lower/upper bounds on the action of the ``epsilon`` ramp."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    lower = p.separation ** 2 / (4 * epsilon)
    return lower, lower + 2 * epsilon * segment_sup(p)


def optimal_ramp_width(p: Potential) -> float:
    """Minimiser ``|a+ - a-| / (2 sqrt(2 sup W))`` of the ramp upper bound."""
    s = segment_sup(p)
    if s <= 0:
        return 0.0
    return p.separation / (2 * math.sqrt(2 * s))


def best_affine_seed(grid: Grid, p: Potential) -> DiscretePath:
    """Ramp seed with the width minimising the upper action bound.

    When W vanishes along the whole segment the bound is minimised by a jump,
    returned as a one-cell ramp (``eps = h``).
    """
    eps = optimal_ramp_width(p)
    if eps <= 0:
        eps = grid.spacing
    return make_affine(grid, p.minus_minimum, p.plus_minimum, eps)


def action_gradient(path: DiscretePath, p: Potential) -> np.ndarray:
    """Exact gradient of :func:`action` w.r.t. node values; zero on clamped ends."""
    _check_dim(path, p)
    u = path.values
    h = path.grid.spacing
    g = np.zeros_like(u)
    g[1:-1] = -(u[2:] - 2.0 * u[1:-1] + u[:-2]) / h + h * p.grad(u[1:-1])
    return g


def el_residual(path: DiscretePath, p: Potential) -> float:
    """Max over interior nodes of ``|D2 u - grad W(u)|``."""
    _check_dim(path, p)
    u = path.values
    if len(u) < 3:
        raise ValueError("need at least 3 nodes")
    h = path.grid.spacing
    r = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h) - p.grad(u[1:-1])
    return float(np.max(np.linalg.norm(r, axis=1)))


def equipartition_defect(path: DiscretePath, p: Potential) -> float:
    """Max over cells of ``| |du/h|^2 - 2 W(cell midpoint) |``."""
    _check_dim(path, p)
    u = path.values
    h = path.grid.spacing
    d = np.diff(u, axis=0) / h
    mid = 0.5 * (u[1:] + u[:-1])
    return float(np.max(np.abs(np.sum(d * d, axis=1) - 2.0 * p.eval(mid))))


def _lp(weights, norms, p):
    return math.fsum(weights * norms ** p) ** (1.0 / p)


def metric_d1pq(U: DiscretePath, V: DiscretePath, p: float, q: float) -> float:
    """Discrete ``||U - V||_p + ||U' - V'||_q`` (trapezoid nodes, one ``h`` per cell)."""
    if U.grid != V.grid or U.dimension != V.dimension:
        raise GridMismatch("paths live on different grids")
    if not (1 < p < math.inf and 1 < q < math.inf):
        raise ValueError("p and q must lie in (1, inf)")
    h = U.grid.spacing
    diff = U.values - V.values
    node = np.linalg.norm(diff, axis=1)
    cell = np.linalg.norm(np.diff(diff, axis=0), axis=1) / h
    return _lp(U.grid.trapezoid_weights(), node, p) + _lp(np.full(len(cell), h), cell, q)


def lp_distance(U: DiscretePath, V: DiscretePath, p: float) -> float:
    if U.grid != V.grid:
        raise GridMismatch("paths live on different grids")
    return _lp(U.grid.trapezoid_weights(), np.linalg.norm(U.values - V.values, axis=1), p)


def distance_from_baseline(U: DiscretePath, p: float) -> float:
    """``L^p`` distance from the unit ramp ``U_aff`` with the same ends."""
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    return lp_distance(U, make_affine(U.grid, U.minus, U.plus, 1.0), p)


def sup_distance(U: DiscretePath, V: DiscretePath) -> float:
    if U.grid != V.grid:
        raise GridMismatch("paths live on different grids")
    return float(np.max(np.linalg.norm(U.values - V.values, axis=1)))


def coarsen(path: DiscretePath) -> DiscretePath:
    """Every other node; keeps the node count odd when ``(m - 1) / 2`` is even."""
    g = Grid(path.grid.half_extent, (path.grid.node_count - 1) // 2 + 1)
    return DiscretePath(g, path.values[::2].copy(), path.minus, path.plus)


def sample_function(grid: Grid, f, minus, plus) -> DiscretePath:
    """Path from a callable ``f(x) -> (m, N)`` or ``(m,)``; ends are clamped."""
    v = np.asarray(f(grid.nodes), dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    v = v.copy()
    v[0] = minus
    v[-1] = plus
    return DiscretePath(grid, v, minus, plus)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def kinetic_density(path: DiscretePath) -> np.ndarray:
    """``0.5 |U_x|^2`` per node from central (one-sided at the ends) differences."""
    ux = np.gradient(path.values, path.grid.spacing, axis=0)
    return 0.5 * np.sum(ux * ux, axis=1)


def path_to_csv(path: DiscretePath, p: Potential | None = None) -> str:
    n = path.dimension
    buf = io.StringIO()
    buf.write(",".join(["x"] + [f"u{k + 1}" for k in range(n)] + ["W", "kinetic_density"]) + "\n")
    W = p.eval(path.values) if p is not None else np.full(path.grid.node_count, np.nan)
    kd = kinetic_density(path)
    for x, u, w, k in zip(path.x, path.values, W, kd):
        buf.write(",".join(f"{v:.17g}" for v in (x, *u, w, k)) + "\n")
    return buf.getvalue()


def write_path_csv(path: DiscretePath, filename, p: Potential | None = None) -> None:
    FsPath(filename).write_text(path_to_csv(path, p))


def read_path_csv(filename) -> DiscretePath:
    """Rebuild a path from the CSV schema; the grid is inferred from the x column."""
    try:
        text = FsPath(filename).read_text()
    except OSError as exc:
        raise SchemaError(str(exc)) from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SchemaError("empty file")
    header = rows[0]
    n = len(header) - 3
    expected = ["x"] + [f"u{k + 1}" for k in range(n)] + ["W", "kinetic_density"]
    if n < 1 or header != expected:
        raise SchemaError(f"bad header {header!r}")
    body = rows[1:]
    if len(body) < 3 or any(len(r) != len(header) for r in body):
        raise SchemaError("truncated or ragged rows")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    x = data[:, 0]
    m = len(x)
    if m % 2 == 0:
        raise SchemaError("node_count must be odd")
    grid = Grid(float(-x[0]), m)
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-9 * max(1.0, grid.half_extent)):
        raise SchemaError("x column is not a symmetric uniform grid")
    values = data[:, 1:1 + n]
    try:
        return DiscretePath(grid, values, values[0].copy(), values[-1].copy())
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
