"""Action minimisation, parabolic relaxation and a posteriori estimate checks.

``minimize_action`` runs a limited-memory quasi-Newton descent on the
discrete action. Every iteration first applies the structural projections
(which never raise the action), every ``recenter_period`` iterations the path
is translated by whole nodes so its ``alpha0`` control set is centered, and
then a backtracking line search takes a step along the quasi-Newton
direction. The inverse-Hessian seed of the two-loop recursion is the inverse
of ``T/h + h*I`` (``T`` the Dirichlet second-difference matrix), which
removes the ``h^-2`` stiffness of the kinetic term.

``relax_parabolic`` integrates ``u_t = u_xx - grad W(u)`` with implicit
diffusion and explicit reaction; its fixed points are the same discrete
critical points, so it serves as an independent cross-check.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .compactify import (
    AuditReport,
    audit_measure_bounds,
    control_set,
    enforce_interval_structure,
    enforce_localization,
    recenter,
    shift_nodes,
)
from .errors import DivergedBelowZero, EmptyControlSet, NotReflected, StepUnstable
from .path import (
    ActionBreakdown,
    DiscretePath,
    Grid,
    action,
    action_gradient,
    best_affine_seed,
    el_residual,
    equipartition_defect,
    make_affine,
)
from .potential import Mode, Potential, constant_m

log = logging.getLogger(__name__)

# Recentering drops nodes that sit within round-off of a-+; their action is
# below this relative level and is tolerated in the monotonicity bookkeeping.
MONOTONE_RTOL = 1e-12


@dataclass
class LineSearch:
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 60


@dataclass
class Seed:
    """Initial path: ``best`` ramp, ``affine`` ramp of width ``epsilon``, or ``custom``.

    ``offset`` translates the seed by the nearest whole number of nodes.
    """

    kind: str = "best"
    epsilon: float | None = None
    path: DiscretePath | None = None
    offset: float = 0.0

    def build(self, grid: Grid, p: Potential) -> DiscretePath:
        if self.kind == "best":
            path = best_affine_seed(grid, p)
        elif self.kind == "affine":
            if self.epsilon is None:
                raise ValueError("affine seed needs epsilon")
            path = make_affine(grid, p.minus_minimum, p.plus_minimum, self.epsilon)
        elif self.kind == "custom":
            if self.path is None or self.path.grid != grid:
                raise ValueError("custom seed must be a path on the configured grid")
            path = self.path.copy()
        else:
            raise ValueError(f"unknown seed kind {self.kind!r}")
        k = int(round(self.offset / grid.spacing))
        return shift_nodes(path, k) if k else path

    def to_dict(self) -> dict:
        return {"kind": self.kind, "epsilon": self.epsilon, "offset": self.offset}


@dataclass
class MinimizeConfig:
    grid: Grid
    seed: Seed = field(default_factory=Seed)
    max_iters: int = 20_000
    grad_tol: float = 1e-8
    action_tol: float = 1e-12
    recenter_period: int = 25
    projection_enabled: bool = True
    line_search: LineSearch = field(default_factory=LineSearch)
    history_size: int = 10
    method: str = "lbfgs"
    precondition: bool = True
    measure_alphas: tuple | None = None

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.action_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.recenter_period < 1:
            raise ValueError("recenter_period must be >= 1")
        if self.method not in ("lbfgs", "gradient"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "L": self.grid.half_extent,
            "m": self.grid.node_count,
            "h": self.grid.spacing,
            "seed": self.seed.to_dict(),
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "action_tol": self.action_tol,
            "recenter_period": self.recenter_period,
            "projection_enabled": self.projection_enabled,
            "line_search": vars(self.line_search).copy(),
            "history_size": self.history_size,
            "method": self.method,
            "precondition": self.precondition,
        }


# ---------------------------------------------------------------------------
# Decay estimates
# ---------------------------------------------------------------------------

@dataclass
class DecayReport:
    threshold: float
    checked_nodes: int
    state_margin_min: float
    derivative_margin_min: float
    failures: list
    x: np.ndarray = field(repr=False)
    state_bound: np.ndarray = field(repr=False)
    derivative_bound: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "checked_nodes": self.checked_nodes,
            "state_margin_min": self.state_margin_min,
            "derivative_margin_min": self.derivative_margin_min,
            "failures": self.failures[:50],
            "n_failures": len(self.failures),
            "pass": self.passed,
        }


def decay_envelopes(x, M: float, w0: float, gamma: float):
    ax = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        state = (M / w0) ** (1.0 / gamma) * ax ** (-1.0 / gamma)
        deriv = math.sqrt(2.0 * M) * ax ** -0.5
    return state, deriv


def verify_decay(path: DiscretePath, p: Potential, M: float) -> DecayReport:
    """Check the algebraic tail bounds on every node with ``|x| >= M/alpha0``.

    State: ``|U - a+-| <= (M/w0)^(1/gamma) |x|^(-1/gamma)``; derivative
    (central differences): ``|U_x| <= sqrt(2M) |x|^(-1/2)``. Both get ``2h`` slack.
    """
    hp = p.hypothesis
    h = path.grid.spacing
    x = path.x
    threshold = M / hp.alpha0
    region = np.abs(x) >= threshold
    state_b, deriv_b = decay_envelopes(x, M, hp.w0, hp.gamma)
    target = np.where((x >= 0)[:, None], path.plus[None, :], path.minus[None, :])
    dist = np.linalg.norm(path.values - target, axis=1)
    ux = np.linalg.norm(np.gradient(path.values, h, axis=0), axis=1)
    s_margin = state_b + 2 * h - dist
    d_margin = deriv_b + 2 * h - ux
    failures = []
    for j in np.flatnonzero(region):
        if s_margin[j] < 0:
            failures.append({"x": float(x[j]), "kind": "state", "margin": float(s_margin[j])})
        if d_margin[j] < 0:
            failures.append({"x": float(x[j]), "kind": "derivative", "margin": float(d_margin[j])})
    if region.any():
        smin, dmin = float(s_margin[region].min()), float(d_margin[region].min())
    else:
        smin = dmin = math.inf
    return DecayReport(float(threshold), int(region.sum()), smin, dmin, failures, x, state_b, deriv_b)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class MinimizeReport:
    final_action: ActionBreakdown
    iterations: int
    el_residual: float
    equipartition_defect: float
    decay: DecayReport
    measure_audit: AuditReport
    upper_bound_M: float
    shifts_applied: list
    converged: bool
    stop_reason: str
    monotone: bool
    action_history: list = field(repr=False, default_factory=list)
    original_action: ActionBreakdown | None = None
    inside_omega: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def strict_bound_pass(self) -> bool:
        return self.final_action.total < self.upper_bound_M

    @property
    def decay_pass(self) -> bool:
        return self.decay.passed

    def to_dict(self) -> dict:
        return {
            "final_action": self.final_action.to_dict(),
            "iterations": self.iterations,
            "el_residual": self.el_residual,
            "equipartition_defect": self.equipartition_defect,
            "decay_pass": self.decay_pass,
            "decay": self.decay.to_dict(),
            "measure_audit": self.measure_audit.to_dict(),
            "upper_bound_M": self.upper_bound_M,
            "strict_bound_pass": self.strict_bound_pass,
            "shifts_applied": list(self.shifts_applied),
            "total_shift": math.fsum(self.shifts_applied),
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "monotone": self.monotone,
            "history_length": len(self.action_history),
            "original_action": None if self.original_action is None else self.original_action.to_dict(),
            "inside_omega": self.inside_omega,
            "notes": list(self.notes),
        }


def default_measure_alphas(p: Potential) -> tuple:
    a0 = p.hypothesis.alpha0
    return (a0 / 9, a0 / 3, a0)


def build_report(path: DiscretePath, p: Potential, *, iterations=0, shifts=(), converged=True,
                 stop_reason="", history=(), alphas=None, M=None) -> MinimizeReport:
    """Evaluate every a posteriori check on ``path``."""
    M = constant_m(p) if M is None else M
    alphas = default_measure_alphas(p) if alphas is None else alphas
    E = action(path, p)
    hist = list(history)
    monotone = all(b <= a + MONOTONE_RTOL * max(1.0, abs(a)) for a, b in zip(hist, hist[1:]))
    report = MinimizeReport(
        final_action=E,
        iterations=iterations,
        el_residual=el_residual(path, p),
        equipartition_defect=equipartition_defect(path, p),
        decay=verify_decay(path, p, M),
        measure_audit=audit_measure_bounds(path, p, alphas, M),
        upper_bound_M=M,
        shifts_applied=list(shifts),
        converged=converged,
        stop_reason=stop_reason,
        monotone=monotone,
        action_history=hist,
    )
    if p.reflected and p.source is not None:
        report.original_action = action(path, p.source)
        omega = p.hypothesis.omega
        if omega is not None:
            report.inside_omega = bool(np.all(omega.contains(path.values)))
        report.notes.append("minimised on the reflected potential; original_action uses the unreflected W")
    return report


# ---------------------------------------------------------------------------
# Descent
# ---------------------------------------------------------------------------

class _Preconditioner:
    """Solve ``(T/h + shift*h*I) z = r`` on interior nodes, column-wise."""

    def __init__(self, m: int, h: float, shift: float = 1.0):
        self.factor = _tridiag_factor(m - 2, 2.0 / h + shift * h, -1.0 / h)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        z = np.zeros_like(r)
        z[1:-1] = _tridiag_solve(self.factor, r[1:-1])
        return z


def _tridiag_factor(n: int, diag: float, off: float):
    """LDL^T factor of the constant symmetric positive definite tridiagonal matrix."""
    d, e, info = lapack.dpttrf(np.full(n, diag), np.full(n - 1, off))
    if info != 0:
        raise np.linalg.LinAlgError(f"dpttrf failed with info={info}")
    return d, e


def _tridiag_solve(factor, rhs: np.ndarray) -> np.ndarray:
    x, info = lapack.dpttrs(factor[0], factor[1], rhs)
    if info != 0:
        raise np.linalg.LinAlgError(f"dpttrs failed with info={info}")
    return x


def _max_node_norm(g: np.ndarray) -> float:
    return float(np.sqrt(np.max(np.sum(g * g, axis=1))))


def _nonnegative(p: Potential) -> bool:
    return p.hypothesis.mode is Mode.COERCIVE and (p.conforming or p.reflected)


def minimize_action(p: Potential, cfg: MinimizeConfig) -> tuple[DiscretePath, MinimizeReport]:
    """Minimise the discrete action from the configured seed.

    The recorded action sequence (steps, projections and recentering) is
    nonincreasing. Stops when the largest node gradient drops below
    ``grad_tol``, when a step lowers the action by a relative amount at most
    ``action_tol``, or after ``max_iters`` iterations.
    """
    hp = p.hypothesis
    if hp.mode is Mode.LOCALIZED:
        raise NotReflected("localized potentials must be passed through reflect_potential first")
    grid = cfg.grid
    h = grid.spacing
    alpha0 = hp.alpha0
    omega = hp.omega if p.reflected else None
    ls = cfg.line_search

    path = cfg.seed.build(grid, p)
    E = action(path, p).total
    history = [E]
    shifts: list[float] = []
    precond = _Preconditioner(grid.node_count, h) if cfg.precondition else (lambda r: r.copy())
    memory: deque = deque(maxlen=cfg.history_size)
    gamma = 1.0

    def replace_path(new_path: DiscretePath, what: str) -> bool:
        nonlocal path, E
        E_new = action(new_path, p).total
        if E_new > E + MONOTONE_RTOL * max(1.0, abs(E)):
            log.debug("%s rejected: action %.17g -> %.17g", what, E, E_new)
            return False
        path, E = new_path, E_new
        history.append(E)
        memory.clear()
        return True

    def try_recenter():
        try:
            new_path, xc = recenter(path, p, alpha0)
        except EmptyControlSet:
            return
        if xc != 0.0 and replace_path(new_path, "recenter"):
            shifts.append(-xc)

    converged = False
    stop_reason = "max_iters"
    it = 0
    g = action_gradient(path, p)
    for it in range(1, cfg.max_iters + 1):
        if cfg.projection_enabled:
            new_path, changed = enforce_interval_structure(path, p, alpha0)
            if changed:
                replace_path(new_path, "interval projection")
            if omega is not None:
                new_path, changed = enforce_localization(path, omega, p)
                if changed:
                    replace_path(new_path, "localization projection")
        if (it - 1) % cfg.recenter_period == 0:
            try_recenter()

        g = action_gradient(path, p)
        if _max_node_norm(g) <= cfg.grad_tol:
            converged, stop_reason = True, "grad_tol"
            break

        u = path.values
        for attempt in range(2):
            if cfg.method == "lbfgs" and memory:
                d = -_two_loop(g, memory, precond, gamma)
            else:
                d = -precond(g) if cfg.method == "lbfgs" else -g
            slope = float(np.vdot(g, d))
            if slope >= 0:
                memory.clear()
                d = -precond(g) if cfg.method == "lbfgs" else -g
                slope = float(np.vdot(g, d))
            t = ls.initial_step
            accepted = None
            for _ in range(ls.max_backtracks):
                trial = path.with_values(u + t * d)
                E_trial = action(trial, p).total
                if E_trial <= E + ls.sufficient_decrease * t * slope:
                    accepted = trial
                    break
                t *= ls.shrink
            if accepted is not None or not memory:
                break
            memory.clear()
        if accepted is None:
            converged = _max_node_norm(g) <= 1e3 * cfg.grad_tol
            stop_reason = "line_search_stalled"
            break

        E_old = E
        path, E = accepted, E_trial
        history.append(E)
        if _nonnegative(p) and E < -1e-12:
            raise DivergedBelowZero(f"action {E} < 0 for a nonnegative potential")
        g_new = action_gradient(path, p)
        s = path.values - u
        y = g_new - g
        sy = float(np.vdot(s, y))
        if sy > 1e-14 * math.sqrt(float(np.vdot(s, s)) * float(np.vdot(y, y))):
            memory.append((s, y, 1.0 / sy))
            gamma = sy / float(np.vdot(y, precond(y)))
        g = g_new
        if (E_old - E) <= cfg.action_tol * max(abs(E_old), 1e-300):
            converged, stop_reason = True, "action_tol"
            break

    try_recenter()
    report = build_report(path, p, iterations=it, shifts=shifts, converged=converged,
                          stop_reason=stop_reason, history=history, alphas=cfg.measure_alphas)
    if p.reflected and report.inside_omega is False:
        report.notes.append("final path leaves omega")
    return path, report


def _two_loop(g, memory, precond, gamma):
    q = g.copy()
    coeffs = []
    for s, y, rho in reversed(memory):
        a = rho * float(np.vdot(s, q))
        q -= a * y
        coeffs.append(a)
    r = gamma * precond(q)
    for (s, y, rho), a in zip(memory, reversed(coeffs)):
        b = rho * float(np.vdot(y, r))
        r += (a - b) * s
    return r


# ---------------------------------------------------------------------------
# Parabolic relaxation
# ---------------------------------------------------------------------------

def _fast_action(u, weights, h, p):
    d = np.diff(u, axis=0)
    return 0.5 * float(np.sum(d * d)) / h + float(np.dot(weights, p.eval(u)))


def relax_parabolic(p: Potential, path: DiscretePath, dt: float, steps: int,
                    recenter_period: int | None = 25, audit: bool = True,
                    shifts: list | None = None) -> DiscretePath:
    """Integrate ``u_t = u_xx - grad W(u)`` with Dirichlet ends.

    Diffusion is implicit (one tridiagonal LDL^T factor, reused), reaction is
    explicit. With ``audit`` the action is evaluated after every step and an
    increase above ``1e-8`` raises :class:`StepUnstable`. Applied
    recentering translations are appended to ``shifts`` when given.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if p.hypothesis.mode is Mode.LOCALIZED:
        raise NotReflected("localized potentials must be passed through reflect_potential first")
    grid = path.grid
    h = grid.spacing
    r = dt / (h * h)
    factor = _tridiag_factor(grid.node_count - 2, 1.0 + 2.0 * r, -r)
    weights = grid.trapezoid_weights()
    a_m, a_p = path.minus, path.plus
    alpha0 = p.hypothesis.alpha0

    u = path.values.copy()
    E = _fast_action(u, weights, h, p) if audit else 0.0
    for step in range(1, steps + 1):
        rhs = u[1:-1] - dt * p.grad(u[1:-1])
        rhs[0] += r * a_m
        rhs[-1] += r * a_p
        u[1:-1] = _tridiag_solve(factor, rhs)
        if audit:
            E_new = _fast_action(u, weights, h, p)
            if E_new > E + 1e-8:
                raise StepUnstable(f"action rose by {E_new - E:.3e} at step {step} (dt={dt})")
            E = E_new
        if recenter_period and step % recenter_period == 0:
            current = DiscretePath(grid, u, a_m, a_p)
            try:
                moved, xc = recenter(current, p, alpha0)
            except EmptyControlSet:
                continue
            if xc != 0.0:
                u = moved.values.copy()
                if shifts is not None:
                    shifts.append(-xc)
                if audit:
                    E = _fast_action(u, weights, h, p)
    return DiscretePath(grid, u, a_m, a_p)


# ---------------------------------------------------------------------------
# Obstruction diagnostic
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticReport:
    plateau_detected: bool
    plateau_fraction: float
    plateau_width: float
    third_minimum: list
    control_measure: float
    measure_ceiling: float
    final_action: float
    half_extent: float
    path: DiscretePath | None = field(default=None, repr=False)

    @property
    def ceiling_ratio(self) -> float:
        return self.control_measure / self.measure_ceiling

    def to_dict(self) -> dict:
        d = {k: v for k, v in vars(self).items() if k != "path"}
        d["ceiling_ratio"] = self.ceiling_ratio
        return d


def triple_well_diagnostic(p: Potential, cfg: MinimizeConfig, radius: float = 0.1,
                           fraction: float = 0.1) -> DiagnosticReport:
    """Run the descent on a potential with a third zero and look for a dwell plateau.

    A plateau is declared when at least ``fraction`` of the nodes sit within
    ``radius`` of the third minimum; a potential without one never reports a
    plateau. The control-set measure at ``alpha0`` is compared with its
    ceiling ``M/alpha0``.
    """
    path, report = minimize_action(p, cfg)
    if p.other_minima:
        third = np.asarray(p.other_minima[0], dtype=float)
        near = np.linalg.norm(path.values - third[None, :], axis=1) <= radius
    else:
        third = np.zeros(0)
        near = np.zeros(path.grid.node_count, dtype=bool)
    longest = 0
    run = 0
    for flag in near:
        run = run + 1 if flag else 0
        longest = max(longest, run)
    M = report.upper_bound_M
    alpha0 = p.hypothesis.alpha0
    try:
        measure = control_set(path, p, alpha0).measure
    except EmptyControlSet:
        measure = 0.0
    frac = float(near.mean())
    return DiagnosticReport(
        plateau_detected=frac >= fraction,
        plateau_fraction=frac,
        plateau_width=longest * path.grid.spacing,
        third_minimum=third.tolist(),
        control_measure=measure,
        measure_ceiling=M / alpha0,
        final_action=report.final_action.total,
        half_extent=path.grid.half_extent,
        path=path,
    )
