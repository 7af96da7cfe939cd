"""Multi-well potentials, hypothesis audits and sublevel-set geometry.

A :class:`Potential` bundles a vectorised value/gradient pair with the two
wells ``a-``/``a+`` and the structural constants (``alpha0``, ``gamma``,
``w0`` and, for localized potentials, the region ``omega`` and ``w_max``).
All callables act on arrays of shape ``(..., N)`` and reduce the last axis.

Hypothesis checks here are audits: they sample, they do not prove.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    AmbiguousComponent,
    ComponentNotFound,
    ConvexityViolation,
    DisconnectedComponentTouch,
    ExtraComponentDetected,
    GrowthViolation,
    MissingLocalization,
    NameNotFound,
)

TOL_ZERO = 1e-12
TOL_GRAD = 1e-8
MIDPOINT_SLACK = 1e-12
SEGMENT_SAMPLES = 64


class Mode(enum.Enum):
    COERCIVE = "coercive"
    LOCALIZED = "localized"


class ComponentLabel(enum.Enum):
    MINUS = "minus"
    PLUS = "plus"
    OUTSIDE = "outside"


# ---------------------------------------------------------------------------
# Convex regions
# ---------------------------------------------------------------------------

class ConvexRegion:
    """Closed convex set with an exact, vectorised membership test."""

    def contains(self, U) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(ConvexRegion):
    center: np.ndarray
    radius: float

    def contains(self, U):
        U = np.asarray(U, dtype=float)
        d = U - np.asarray(self.center, dtype=float)
        return np.sum(d * d, axis=-1) <= self.radius * self.radius

    def to_dict(self):
        return {"shape": "ball", "center": list(map(float, self.center)), "radius": float(self.radius)}


@dataclass(frozen=True)
class Box(ConvexRegion):
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, U):
        U = np.asarray(U, dtype=float)
        return np.all((U >= np.asarray(self.lo)) & (U <= np.asarray(self.hi)), axis=-1)

    def to_dict(self):
        return {"shape": "box", "lo": list(map(float, self.lo)), "hi": list(map(float, self.hi))}


@dataclass(frozen=True)
class HalfspaceIntersection(ConvexRegion):
    """Intersection of halfspaces ``normal . u <= offset``."""

    halfspaces: tuple

    def contains(self, U):
        U = np.asarray(U, dtype=float)
        inside = np.ones(U.shape[:-1], dtype=bool)
        for normal, offset in self.halfspaces:
            inside &= U @ np.asarray(normal, dtype=float) <= offset
        return inside

    def to_dict(self):
        return {
            "shape": "halfspaces",
            "halfspaces": [[list(map(float, n)), float(b)] for n, b in self.halfspaces],
        }


def region_from_dict(d: dict) -> ConvexRegion:
    shape = d.get("shape")
    if shape == "ball":
        return Ball(np.asarray(d["center"], float), float(d["radius"]))
    if shape == "box":
        return Box(np.asarray(d["lo"], float), np.asarray(d["hi"], float))
    if shape == "halfspaces":
        return HalfspaceIntersection(tuple((tuple(n), float(b)) for n, b in d["halfspaces"]))
    raise ValueError(f"unknown region shape {shape!r}")


# ---------------------------------------------------------------------------
# Potential
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisParams:
    alpha0: float
    gamma: float
    w0: float
    mode: Mode = Mode.COERCIVE
    omega: ConvexRegion | None = None
    w_max: float | None = None

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.gamma >= 2:
            raise ValueError("gamma must be >= 2")
        if not self.w0 > 0:
            raise ValueError("w0 must be positive")
        if self.mode is Mode.LOCALIZED:
            if self.omega is None or self.w_max is None:
                raise MissingLocalization("localized mode needs omega and w_max")
            if not self.w_max > self.alpha0:
                raise ValueError("w_max must exceed alpha0")

    def to_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "gamma": self.gamma,
            "w0": self.w0,
            "mode": self.mode.value,
            "omega": None if self.omega is None else self.omega.to_dict(),
            "w_max": self.w_max,
        }


@dataclass(frozen=True, eq=False)
class Potential:
    """Value/gradient bundle of W with its two wells.

    ``eval`` maps ``(..., N) -> (...)`` and ``grad`` maps ``(..., N) -> (..., N)``.
    """

    dimension: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    minus_minimum: np.ndarray
    plus_minimum: np.ndarray
    hypothesis: HypothesisParams
    name: str = ""
    conforming: bool = True
    other_minima: tuple = ()
    reflected: bool = False
    source: "Potential | None" = field(default=None, repr=False)
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "minus_minimum", np.asarray(self.minus_minimum, dtype=float).reshape(self.dimension))
        object.__setattr__(self, "plus_minimum", np.asarray(self.plus_minimum, dtype=float).reshape(self.dimension))
        if not self.validate:
            return
        for a in (self.minus_minimum, self.plus_minimum):
            if abs(float(self.eval(a))) > TOL_ZERO:
                raise ValueError(f"W({a.tolist()}) = {float(self.eval(a))!r} is not zero")
            if np.linalg.norm(self.grad(a)) > TOL_GRAD:
                raise ValueError(f"grad W({a.tolist()}) does not vanish")

    @property
    def separation(self) -> float:
        return float(np.linalg.norm(self.plus_minimum - self.minus_minimum))

    def swapped(self) -> "Potential":
        """Same potential with the roles of ``a-`` and ``a+`` exchanged."""
        return replace(self, minus_minimum=self.plus_minimum, plus_minimum=self.minus_minimum)


def gradient_fd_error(p: Potential, points, step: float = 1e-6) -> float:
    """Largest relative error between ``p.grad`` and central differences of ``p.eval``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    for u in points:
        fd = np.empty(p.dimension)
        for k in range(p.dimension):
            e = np.zeros(p.dimension)
            e[k] = step
            fd[k] = (float(p.eval(u + e)) - float(p.eval(u - e))) / (2 * step)
        g = p.grad(u)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1.0)))
    return worst


# ---------------------------------------------------------------------------
# Sublevel geometry
# ---------------------------------------------------------------------------

def _check_alpha(p: Potential, alpha: float) -> None:
    if not (0 < alpha <= p.hypothesis.alpha0 * (1 + 1e-12)):
        raise ValueError(f"alpha={alpha} outside (0, alpha0={p.hypothesis.alpha0}]")


def _segments_inside(p: Potential, U, target, alpha, n=SEGMENT_SAMPLES) -> np.ndarray:
    """For each row of ``U``, whether the segment to ``target`` stays in ``{W <= alpha}``."""
    U = np.atleast_2d(U)
    t = np.linspace(0.0, 1.0, n)[None, :, None]
    pts = U[:, None, :] + t * (np.asarray(target)[None, None, :] - U[:, None, :])
    return np.all(p.eval(pts) <= alpha, axis=1)


def component_of(p: Potential, u, alpha: float, n_segment: int = SEGMENT_SAMPLES) -> ComponentLabel:
    """Which well's sublevel component the point ``u`` belongs to.

    Membership is decided by sampling the straight segment from ``u`` to the
    well minimum. A point of ``{W <= alpha}`` joined to neither minimum (a third
    component) is reported as ``OUTSIDE``.
    """
    _check_alpha(p, alpha)
    u = np.asarray(u, dtype=float).reshape(p.dimension)
    if float(p.eval(u)) > alpha:
        return ComponentLabel.OUTSIDE
    to_minus = bool(_segments_inside(p, u, p.minus_minimum, alpha, n_segment)[0])
    to_plus = bool(_segments_inside(p, u, p.plus_minimum, alpha, n_segment)[0])
    if to_minus and to_plus and p.separation > 0:
        raise AmbiguousComponent(f"{u.tolist()} is joined to both wells inside {{W <= {alpha}}}")
    if to_minus:
        return ComponentLabel.MINUS
    if to_plus:
        return ComponentLabel.PLUS
    return ComponentLabel.OUTSIDE


def _ray_directions(dim: int, n: int, axis=None, rng=None) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        theta = 2 * np.pi * np.arange(n) / n
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        if axis is not None:
            # rotate so that the inter-well axis is one of the rays
            c, s = axis[0], axis[1]
            rot = np.array([[c, -s], [s, c]])
            dirs = dirs @ rot.T
        return dirs
    rng = np.random.default_rng(0) if rng is None else rng
    dirs = rng.standard_normal((n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if axis is not None:
        dirs[0], dirs[1] = axis, -axis
    return dirs


def _boundary_points(p: Potential, center, alpha, dirs, r_max, n_march=512, n_bisect=60):
    """First crossing of ``{W = alpha}`` along each ray ``center + t*dir``.

    Returns ``(points, radii, found)``; rays without a bracketed crossing
    inside ``r_max`` have ``found == False``.
    """
    center = np.asarray(center, dtype=float)
    ts = np.linspace(0.0, r_max, n_march + 1)[1:]
    pts = center[None, None, :] + ts[:, None, None] * dirs[None, :, :]
    above = p.eval(pts) > alpha
    found = above.any(axis=0)
    first = np.argmax(above, axis=0)
    hi = ts[first]
    lo = np.where(first > 0, ts[np.maximum(first - 1, 0)], 0.0)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        out = p.eval(center + mid[:, None] * dirs) > alpha
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    radii = np.where(found, lo, r_max)
    return center + radii[:, None] * dirs, radii, found


def _ray_scale(p: Potential) -> float:
    s = p.separation
    return s if s > 0 else 1.0


def distance_between_levels(p: Potential, alpha: float, n_rays: int = 256, max_rays: int = 8192,
                            rng=None) -> float:
    """Distance ``d_alpha`` between the two components of ``{W <= alpha}``.

    Boundary clouds are sampled by bisection on rays from each minimum; the
    ray count doubles until two successive estimates agree to
    ``1e-4 * |a+ - a-|``.
    """
    _check_alpha(p, alpha)
    scale = _ray_scale(p)
    axis = None
    if p.separation > 0:
        axis = (p.plus_minimum - p.minus_minimum) / p.separation

    def estimate(n):
        dirs = _ray_directions(p.dimension, n, axis=axis, rng=rng)
        minus, _, fm = _boundary_points(p, p.minus_minimum, alpha, dirs, 2 * scale)
        plus, _, fp = _boundary_points(p, p.plus_minimum, alpha, dirs, 2 * scale)
        if not fm.any() or not fp.any():
            raise ComponentNotFound(f"no boundary crossing of {{W = {alpha}}} was bracketed")
        dist, _ = cKDTree(plus[fp]).query(minus[fm])
        return float(dist.min())

    d = estimate(n_rays)
    if p.dimension == 1:
        return d
    n = n_rays
    while 2 * n <= max_rays:
        n *= 2
        d_new = estimate(n)
        if abs(d_new - d) < 1e-4 * scale:
            return min(d, d_new)
        d = d_new
    return d


def segment_samples(p: Potential, n: int = 10_001) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return p.minus_minimum[None, :] + t * (p.plus_minimum - p.minus_minimum)[None, :]


def segment_sup(p: Potential, n: int = 10_001) -> float:
    """Maximum of W over ``n`` equispaced points of the segment ``[a-, a+]``."""
    return float(np.max(p.eval(segment_samples(p, n))))


def constant_m(p: Potential, n: int = 10_001) -> float:
    """``M = |a+ - a-| * max over [a-, a+] of sqrt(2W)``."""
    w = np.clip(p.eval(segment_samples(p, n)), 0.0, None)
    return p.separation * float(np.max(np.sqrt(2.0 * w)))


# ---------------------------------------------------------------------------
# (A1) audit
# ---------------------------------------------------------------------------

@dataclass
class LevelAudit:
    alpha: float
    n_minus: int
    n_plus: int
    n_other: int
    n_touch: int
    convexity_failures: int
    pairs_tested: int


@dataclass
class HypothesisReport:
    samples: int
    levels: list
    growth_ratio_min: float
    w0: float
    passed: bool
    problems: list

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "levels": [vars(lv) for lv in self.levels],
            "growth_ratio_min": self.growth_ratio_min,
            "w0": self.w0,
            "passed": self.passed,
            "problems": list(self.problems),
        }


def verify_a1(p: Potential, samples: int = 10_000, rng=None, strict: bool = True,
              n_pairs: int = 2000) -> HypothesisReport:
    """Sampling audit of the two-convex-wells hypothesis and the growth bound.

    For ``alpha`` in ``alpha0 * (1, 1/2, 1/4)`` points are drawn uniformly in a
    box around both wells, kept if ``W <= alpha`` and labelled by segment
    connectivity to ``a-``/``a+``. Convexity is probed with midpoints of random
    same-label pairs, disjointness with segments across labels. The growth
    ratio ``W(u) / |u - a|^gamma`` is minimised over the ``alpha0`` samples and
    the sampled boundary points.

    In coercive mode a sublevel point joined to neither well is a violation
    (only two components are allowed); in localized mode samples are
    restricted to ``omega``.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    rng = np.random.default_rng(0) if rng is None else rng
    hp = p.hypothesis
    a_m, a_p = p.minus_minimum, p.plus_minimum
    scale = _ray_scale(p)
    axis = (a_p - a_m) / p.separation if p.separation > 0 else None
    dirs = _ray_directions(p.dimension, 256, axis=axis)

    levels = []
    problems: list[tuple[type, str]] = []
    ratios = []
    for alpha in (hp.alpha0, hp.alpha0 / 2, hp.alpha0 / 4):
        bm, rm, _ = _boundary_points(p, a_m, alpha, dirs, 2 * scale)
        bp, rp, _ = _boundary_points(p, a_p, alpha, dirs, 2 * scale)
        r = 1.5 * max(rm.max(), rp.max())
        lo = np.minimum(a_m, a_p) - r
        hi = np.maximum(a_m, a_p) + r
        U = lo + (hi - lo) * rng.random((samples, p.dimension))
        keep = p.eval(U) <= alpha
        if hp.mode is Mode.LOCALIZED:
            keep &= hp.omega.contains(U)
        U = U[keep]
        to_m = _segments_inside(p, U, a_m, alpha) if len(U) else np.zeros(0, bool)
        to_p = _segments_inside(p, U, a_p, alpha) if len(U) else np.zeros(0, bool)
        both = to_m & to_p if p.separation > 0 else np.zeros_like(to_m)
        Um, Up = U[to_m & ~both], U[to_p & ~both]
        other = U[~to_m & ~to_p]
        n_touch = int(both.sum())

        if len(Um) and len(Up):
            i = rng.integers(0, len(Um), min(n_pairs // 4, 500))
            j = rng.integers(0, len(Up), len(i))
            t = np.linspace(0.0, 1.0, SEGMENT_SAMPLES)[None, :, None]
            seg = Um[i][:, None, :] + t * (Up[j] - Um[i])[:, None, :]
            n_touch += int(np.all(p.eval(seg) <= hp.alpha0, axis=1).sum())

        conv_fail = 0
        pairs = 0
        for cloud, bnd in ((Um, bm), (Up, bp)):
            pts = np.concatenate([cloud, bnd]) if len(cloud) else bnd
            if len(pts) < 2:
                continue
            i = rng.integers(0, len(pts), n_pairs)
            j = rng.integers(0, len(pts), n_pairs)
            mid = 0.5 * (pts[i] + pts[j])
            conv_fail += int(np.sum(p.eval(mid) > alpha + MIDPOINT_SLACK))
            pairs += n_pairs

        levels.append(LevelAudit(float(alpha), len(Um), len(Up), len(other), n_touch, conv_fail, pairs))
        if n_touch:
            problems.append((DisconnectedComponentTouch,
                             f"alpha={alpha}: {n_touch} sampled segments join the two wells inside the sublevel set"))
        if conv_fail:
            problems.append((ConvexityViolation, f"alpha={alpha}: {conv_fail} midpoint probes left the sublevel set"))
        if len(other) and hp.mode is Mode.COERCIVE:
            problems.append((ExtraComponentDetected,
                             f"alpha={alpha}: {len(other)} sublevel samples belong to neither well"))

        if alpha == hp.alpha0:
            for cloud, bnd, a in ((Um, bm, a_m), (Up, bp, a_p)):
                pts = np.concatenate([cloud, bnd])
                dist = np.linalg.norm(pts - a, axis=1)
                ok = dist > 1e-9
                if ok.any():
                    ratios.append(float(np.min(p.eval(pts[ok]) / dist[ok] ** hp.gamma)))

    ratio_min = min(ratios) if ratios else float("inf")
    if ratio_min < hp.w0 * (1 - 1e-9):
        problems.append((GrowthViolation, f"empirical min W/|u-a|^gamma = {ratio_min:.6g} < w0 = {hp.w0}"))

    report = HypothesisReport(samples, levels, ratio_min, hp.w0, not problems, [msg for _, msg in problems])
    if strict and problems:
        exc_type, msg = problems[0]
        exc = exc_type(msg)
        exc.report = report
        raise exc
    return report


# ---------------------------------------------------------------------------
# Reflection across w = w_max
# ---------------------------------------------------------------------------

def reflect_potential(p: Potential) -> Potential:
    """Coercive deformation of a localized potential.

    Inside ``omega`` the values are untouched (same arithmetic path). Outside,
    any value below ``w_max`` is mirrored to ``2*w_max - W`` and its gradient
    flips sign, so the result is at least ``w_max`` off ``omega``.
    """
    hp = p.hypothesis
    if hp.mode is not Mode.LOCALIZED or hp.omega is None or hp.w_max is None:
        raise MissingLocalization(f"potential {p.name!r} has no localization data")
    omega, w_max = hp.omega, float(hp.w_max)
    W, dW = p.eval, p.grad

    def value(U):
        U = np.asarray(U, dtype=float)
        w = W(U)
        flip = ~omega.contains(U) & (w < w_max)
        return np.where(flip, 2.0 * w_max - w, w)

    def gradient(U):
        U = np.asarray(U, dtype=float)
        g = dW(U)
        flip = ~omega.contains(U) & (W(U) < w_max)
        return np.where(flip[..., None], -g, g)

    return replace(
        p,
        eval=value,
        grad=gradient,
        hypothesis=replace(hp, mode=Mode.COERCIVE),
        name=f"{p.name}:reflected" if p.name else "reflected",
        reflected=True,
        source=p,
    )


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _quartic_value(U):
    u = U[..., 0]
    return 0.25 * (1.0 - u * u) ** 2


def _quartic_grad(U):
    u = U[..., 0]
    return ((u * u - 1.0) * u)[..., None]


def _planar_value(U):
    u, v = U[..., 0], U[..., 1]
    return 0.25 * (1.0 - u * u) ** 2 + 0.5 * v * v


def _planar_grad(U):
    u, v = U[..., 0], U[..., 1]
    return np.stack([(u * u - 1.0) * u, v], axis=-1)


def _triple_value(U):
    u = U[..., 0]
    return 0.25 * u * u * (u * u - 1.0) ** 2


def _triple_grad(U):
    u = U[..., 0]
    return (0.5 * u * (u * u - 1.0) * (3.0 * u * u - 1.0))[..., None]


NONCOERCIVE_TAIL = 0.5


def _noncoercive_value(U):
    u = U[..., 0]
    tail = np.maximum(0.0, np.abs(u) - 2.0)
    return 0.25 * (1.0 - u * u) ** 2 - NONCOERCIVE_TAIL * tail ** 5


def _noncoercive_grad(U):
    u = U[..., 0]
    tail = np.maximum(0.0, np.abs(u) - 2.0)
    return ((u * u - 1.0) * u - 5.0 * NONCOERCIVE_TAIL * tail ** 4 * np.sign(u))[..., None]


def builtin_catalog() -> dict[str, Potential]:
    """Named potentials used by the CLI, the tests and the acceptance suite."""
    wells = HypothesisParams(alpha0=0.09, gamma=2.0, w0=0.5)
    return {
        "quartic1d": Potential(1, _quartic_value, _quartic_grad, [-1.0], [1.0], wells, name="quartic1d"),
        "planar-embedded": Potential(2, _planar_value, _planar_grad, [-1.0, 0.0], [1.0, 0.0], wells,
                                     name="planar-embedded"),
        "triple-well": Potential(1, _triple_value, _triple_grad, [-1.0], [1.0],
                                 HypothesisParams(alpha0=0.01, gamma=2.0, w0=0.5),
                                 name="triple-well", conforming=False, other_minima=(np.array([0.0]),)),
        "noncoercive1d": Potential(
            1, _noncoercive_value, _noncoercive_grad, [-1.0], [1.0],
            HypothesisParams(alpha0=0.09, gamma=2.0, w0=0.5, mode=Mode.LOCALIZED,
                             omega=Box(np.array([-2.0]), np.array([2.0])), w_max=2.25),
            name="noncoercive1d"),
    }


def get_potential(name: str) -> Potential:
    catalog = builtin_catalog()
    try:
        return catalog[name]
    except KeyError:
        raise NameNotFound(f"unknown potential {name!r}; known: {', '.join(sorted(catalog))}") from None


# ---------------------------------------------------------------------------
# Polynomial potentials from config tables
# ---------------------------------------------------------------------------

def polynomial_potential(terms: Sequence, minus, plus, hypothesis: HypothesisParams,
                         name: str = "polynomial") -> Potential:
    """Potential ``sum_k c_k * prod_i u_i**p_ki`` from ``(coef, powers)`` pairs."""
    coefs = np.array([float(c) for c, _ in terms])
    powers = np.array([list(pw) for _, pw in terms], dtype=int)
    if powers.ndim != 2 or powers.shape[1] > 3:
        raise ValueError("polynomial potentials support 1 <= N <= 3")
    if np.any(powers < 0):
        raise ValueError("polynomial powers must be nonnegative")
    dim = powers.shape[1]

    def value(U):
        U = np.asarray(U, dtype=float)
        out = np.zeros(U.shape[:-1])
        for c, pw in zip(coefs, powers):
            out = out + c * np.prod(U ** pw, axis=-1)
        return out

    def gradient(U):
        U = np.asarray(U, dtype=float)
        out = np.zeros(U.shape)
        for c, pw in zip(coefs, powers):
            for i in range(dim):
                if pw[i] == 0:
                    continue
                dp = pw.copy()
                dp[i] -= 1
                out[..., i] += c * pw[i] * np.prod(U ** dp, axis=-1)
        return out

    return Potential(dim, value, gradient, minus, plus, hypothesis, name=name)
