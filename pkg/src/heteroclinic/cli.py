"""Command-line front end.

Subcommands: ``solve``, ``verify``, ``sweep``, ``reflect``, ``compare``, ``catalog``.
Exit codes: 0 success, 1 config/schema error, 2 non-convergence, 3 verification failure.

Run configs are flat ``key = value`` files (values parsed as JSON when they
look like JSON) or a single JSON object. Command-line flags override the
file; every resolved setting is written into ``report.json``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .compactify import recenter
from .errors import ConfigError, EmptyControlSet, HeteroclinicError, SchemaError
from .minimize import (
    LineSearch,
    MinimizeConfig,
    MinimizeReport,
    Seed,
    build_report,
    decay_envelopes,
    minimize_action,
    relax_parabolic,
)
from .oracle import QUARTIC_ENERGY, closed_form_result, phase_plane_profile, scalar_energy_quadrature
from .path import (
    DiscretePath,
    Grid,
    coarsen,
    el_residual,
    path_to_csv,
    read_path_csv,
    sup_distance,
)
from .potential import (
    HypothesisParams,
    Mode,
    Potential,
    builtin_catalog,
    constant_m,
    get_potential,
    polynomial_potential,
    reflect_potential,
    verify_a1,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY = 3


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    potential: str = "quartic1d"
    polynomial: dict | None = None
    L: float | None = None
    m: int | None = None
    h: float | None = None
    solver: str = "descent"
    seed: str = "best"
    epsilon: float | None = None
    offset: float = 0.0
    max_iters: int = 20_000
    grad_tol: float = 1e-8
    action_tol: float = 1e-12
    recenter_period: int = 25
    history_size: int = 10
    method: str = "lbfgs"
    projection: bool = True
    precondition: bool = True
    dt: float = 1e-2
    steps: int = 20_000
    residual_tol: float = 1e-3
    defect_tol: float = 1e-3
    rng_seed: int = 0
    hypothesis_samples: int = 10_000
    out: str = "out"

    def __post_init__(self):
        if self.solver not in ("descent", "parabolic"):
            raise ConfigError(f"solver must be 'descent' or 'parabolic', got {self.solver!r}")
        if self.seed not in ("best", "affine"):
            raise ConfigError(f"seed must be 'best' or 'affine', got {self.seed!r}")
        if self.seed == "affine" and self.epsilon is None:
            raise ConfigError("seed 'affine' needs epsilon")
        if self.L is not None and not self.L > 0:
            raise ConfigError("L must be positive")
        if self.h is not None and not self.h > 0:
            raise ConfigError("h must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    kind = _FIELD_TYPES[key]
    if value is None:
        return None
    try:
        if kind.startswith("bool"):
            if isinstance(value, str):
                low = value.strip().lower()
                if low in ("true", "yes", "1", "on"):
                    return True
                if low in ("false", "no", "0", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if kind.startswith("int"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if kind.startswith("float"):
            return float(value)
        if kind.startswith("dict"):
            if isinstance(value, str):
                value = json.loads(value)
            if not isinstance(value, dict):
                raise ValueError(value)
            return value
        return str(value)
    except (TypeError, ValueError, json.JSONDecodeError):
        raise ConfigError(f"config key {key!r}: cannot interpret {value!r} as {kind}") from None


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str) -> dict:
    """Raw key/value mapping from flat ``key = value`` text or a JSON object."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        return raw
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _parse_value(value)
    return raw


def build_config(raw: dict) -> RunConfig:
    for key in raw:
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
    return RunConfig(**{k: _coerce(k, v) for k, v in raw.items()})


def load_config(filename=None, overrides: dict | None = None) -> RunConfig:
    raw = {}
    if filename is not None:
        try:
            raw = parse_config_text(Path(filename).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return build_config(raw)


def resolve_potential(cfg: RunConfig) -> Potential:
    if cfg.polynomial is None:
        return get_potential(cfg.potential)
    spec = dict(cfg.polynomial)
    required = ("terms", "minus", "plus", "alpha0", "gamma", "w0")
    known = set(required) | {"name"}
    for key in spec:
        if key not in known:
            raise ConfigError(f"unknown polynomial key {key!r}")
    missing = [k for k in required if k not in spec]
    if missing:
        raise ConfigError(f"polynomial spec is missing {', '.join(missing)}")
    try:
        hp = HypothesisParams(alpha0=float(spec["alpha0"]), gamma=float(spec["gamma"]), w0=float(spec["w0"]))
        terms = [(c, tuple(pw)) for c, pw in spec["terms"]]
        return polynomial_potential(terms, spec["minus"], spec["plus"], hp, name=spec.get("name", cfg.potential))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"polynomial spec: {exc}") from None


def default_half_extent(p: Potential) -> float:
    """``max(20, 4 M / alpha0)`` rounded up, so the decay region ``|x| >= M/alpha0`` is well sampled."""
    return float(max(20.0, math.ceil(4.0 * constant_m(p) / p.hypothesis.alpha0)))


def resolve_grid(cfg: RunConfig, p: Potential) -> Grid:
    L = cfg.L if cfg.L is not None else default_half_extent(p)
    try:
        if cfg.m is not None:
            grid = Grid(L, cfg.m)
            if cfg.h is not None and not math.isclose(grid.spacing, cfg.h, rel_tol=1e-9):
                raise ConfigError(f"m = {cfg.m} and h = {cfg.h} disagree on [-{L}, {L}]")
            return grid
        return Grid.from_spacing(L, cfg.h if cfg.h is not None else 0.01)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def minimize_config(cfg: RunConfig, grid: Grid) -> MinimizeConfig:
    seed = Seed(kind=cfg.seed, epsilon=cfg.epsilon, offset=cfg.offset)
    try:
        return MinimizeConfig(grid=grid, seed=seed, max_iters=cfg.max_iters, grad_tol=cfg.grad_tol,
                              action_tol=cfg.action_tol, recenter_period=cfg.recenter_period,
                              projection_enabled=cfg.projection, line_search=LineSearch(),
                              history_size=cfg.history_size, method=cfg.method,
                              precondition=cfg.precondition)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_atomic(filename: Path, text: str) -> None:
    filename.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=filename.parent, prefix=f".{filename.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def plot_data_csv(path: DiscretePath, p: Potential, M: float) -> str:
    """x, U, W(U), |U_x|^2 and the two decay envelopes (blank inside ``|x| < M/alpha0``)."""
    hp = p.hypothesis
    x = path.x
    ux = np.gradient(path.values, path.grid.spacing, axis=0)
    speed2 = np.sum(ux * ux, axis=1)
    W = p.eval(path.values)
    state, deriv = decay_envelopes(x, M, hp.w0, hp.gamma)
    region = np.abs(x) >= M / hp.alpha0
    n = path.dimension
    lines = [",".join(["x"] + [f"u{k + 1}" for k in range(n)]
                      + ["W", "speed_sq", "state_envelope", "derivative_envelope"])]
    for j in range(len(x)):
        env = [f"{state[j]:.17g}", f"{deriv[j]:.17g}"] if region[j] else ["", ""]
        row = [f"{x[j]:.17g}"] + [f"{v:.17g}" for v in path.values[j]] + [f"{W[j]:.17g}", f"{speed2[j]:.17g}"]
        lines.append(",".join(row + env))
    return "\n".join(lines) + "\n"


def potential_summary(p: Potential) -> dict:
    return {
        "name": p.name,
        "dimension": p.dimension,
        "minus_minimum": p.minus_minimum,
        "plus_minimum": p.plus_minimum,
        "hypothesis": p.hypothesis.to_dict(),
        "conforming": p.conforming,
        "reflected": p.reflected,
    }


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------

@dataclass
class SolveResult:
    path: DiscretePath
    report: MinimizeReport
    potential: Potential
    grid: Grid
    notes: list = field(default_factory=list)
    runtime: float = 0.0


def run_solver(cfg: RunConfig) -> SolveResult:
    """Resolve the config and run the chosen solver; raises on config errors."""
    p = resolve_potential(cfg)
    notes = []
    if p.hypothesis.mode is Mode.LOCALIZED:
        p = reflect_potential(p)
        notes.append("reflect_potential applied automatically (localized potential)")
    grid = resolve_grid(cfg, p)
    mcfg = minimize_config(cfg, grid)
    t0 = time.perf_counter()
    if cfg.solver == "descent":
        path, report = minimize_action(p, mcfg)
    else:
        seed = mcfg.seed.build(grid, p)
        shifts: list = []
        path = relax_parabolic(p, seed, cfg.dt, cfg.steps, recenter_period=cfg.recenter_period, shifts=shifts)
        try:
            path, xc = recenter(path, p, p.hypothesis.alpha0)
            if xc:
                shifts.append(-xc)
        except EmptyControlSet:
            pass
        converged = el_residual(path, p) <= cfg.residual_tol
        report = build_report(path, p, iterations=cfg.steps, shifts=shifts, converged=converged,
                              stop_reason="steps" if converged else "residual_above_tol")
    runtime = time.perf_counter() - t0
    report.notes.extend(notes)
    return SolveResult(path, report, p, grid, notes, runtime)


def solve_payload(cfg: RunConfig, res: SolveResult) -> dict:
    hyp_target = res.potential.source if res.potential.reflected else res.potential
    hyp = verify_a1(hyp_target, samples=cfg.hypothesis_samples, rng=np.random.default_rng(cfg.rng_seed),
                    strict=False)
    return {
        "config": cfg.to_dict(),
        "grid": {"L": res.grid.half_extent, "m": res.grid.node_count, "h": res.grid.spacing},
        "potential": potential_summary(res.potential),
        "hypothesis_audit": hyp.to_dict(),
        "result": res.report.to_dict(),
        "final_action": res.report.final_action.to_dict(),
        "notes": list(res.report.notes),
    }


def cmd_solve(cfg: RunConfig) -> int:
    try:
        res = run_solver(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HeteroclinicError as exc:
        print(f"solve failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    out = Path(cfg.out)
    write_atomic(out / "solution.csv", path_to_csv(res.path, res.potential))
    write_atomic(out / "plot_data.csv", plot_data_csv(res.path, res.potential, res.report.upper_bound_M))
    write_atomic(out / "report.json", dumps_json(solve_payload(cfg, res)))
    rep = res.report
    print(f"action {rep.final_action.total:.12g} (M = {rep.upper_bound_M:.12g}), "
          f"iterations {rep.iterations}, stop {rep.stop_reason}, runtime {res.runtime:.2f}s")
    for note in rep.notes:
        print(f"note: {note}")
    if not rep.converged:
        print("solve: did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# Verify
# ---------------------------------------------------------------------------

def verify_path(path: DiscretePath, p: Potential, residual_tol: float = 1e-3, defect_tol: float = 1e-3) -> dict:
    """All a posteriori checks on a stored path, as a flat mapping of check -> record."""
    M = constant_m(p)
    report = build_report(path, p, M=M)
    checks = {
        "el_residual": {"value": report.el_residual, "limit": residual_tol,
                        "pass": report.el_residual <= residual_tol},
        "equipartition_defect": {"value": report.equipartition_defect, "limit": defect_tol,
                                 "pass": report.equipartition_defect <= defect_tol},
        "strict_upper_bound": {"value": report.final_action.total, "limit": M,
                               "pass": report.strict_bound_pass},
        "decay": {"value": min(report.decay.state_margin_min, report.decay.derivative_margin_min),
                  "limit": 0.0, "pass": report.decay_pass},
        "measure_bounds": {"value": report.measure_audit.status, "limit": "pass",
                           "pass": report.measure_audit.status == "pass"},
    }
    return {"checks": checks, "report": report.to_dict(), "all_pass": all(c["pass"] for c in checks.values())}


def cmd_verify(solution: str, cfg: RunConfig) -> int:
    try:
        path = read_path_csv(solution)
        p = resolve_potential(cfg)
        if p.hypothesis.mode is Mode.LOCALIZED:
            p = reflect_potential(p)
        if path.dimension != p.dimension:
            raise SchemaError(f"solution has {path.dimension} components, potential {p.name!r} has {p.dimension}")
    except (SchemaError, ConfigError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HeteroclinicError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = verify_path(path, p, cfg.residual_tol, cfg.defect_tol)
    width = max(len(k) for k in result["checks"])
    for name, chk in result["checks"].items():
        value = chk["value"]
        shown = f"{value:.6g}" if isinstance(value, float) else str(value)
        print(f"{name:<{width}}  {'PASS' if chk['pass'] else 'FAIL'}  value={shown}  limit={chk['limit']}")
    if cfg.out:
        write_atomic(Path(cfg.out) / "verify.json", dumps_json(result))
    return EXIT_OK if result["all_pass"] else EXIT_VERIFY


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def observed_orders(hs, errors) -> list:
    out = []
    for (h1, e1), (h2, e2) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        if e1 > 0 and e2 > 0 and h1 != h2:
            out.append(math.log(e1 / e2) / math.log(h1 / h2))
        else:
            out.append(math.nan)
    return out


def reference_energy(p: Potential) -> float | None:
    """Exact connection energy when the connection is known to be scalar."""
    if p.name == "quartic1d":
        return QUARTIC_ENERGY
    if p.dimension == 1 and p.conforming and not p.reflected:
        return scalar_energy_quadrature(p)
    return None


def _consistency_residual(path: DiscretePath, p: Potential) -> float:
    try:
        return el_residual(coarsen(path), p)
    except ValueError:
        return math.nan


def cmd_sweep(cfg: RunConfig, hs=None, epsilons=None) -> int:
    if (hs is None) == (epsilons is None):
        print("config error: give exactly one of --h or --epsilon lists", file=sys.stderr)
        return EXIT_CONFIG
    values = list(hs if hs is not None else epsilons)
    if len(values) < 2:
        print("config error: a sweep needs at least 2 points", file=sys.stderr)
        return EXIT_CONFIG
    key = "h" if hs is not None else "epsilon"
    rows = []
    for v in values:
        run = dataclasses.replace(cfg, m=None, h=v) if key == "h" else \
            dataclasses.replace(cfg, seed="affine", epsilon=v)
        try:
            res = run_solver(run)
        except ConfigError as exc:
            print(f"config error at {key} = {v}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except HeteroclinicError as exc:
            print(f"solve failed at {key} = {v} ({type(exc).__name__}): {exc}", file=sys.stderr)
            return EXIT_NOT_CONVERGED
        rep = res.report
        rows.append({
            key: v,
            "action": rep.final_action.total,
            "el_residual": rep.el_residual,
            "consistency_residual": _consistency_residual(res.path, res.potential),
            "equipartition_defect": rep.equipartition_defect,
            "converged": rep.converged,
            "runtime": res.runtime,
            "potential": res.potential,
        })
    cols = [key, "action", "el_residual", "consistency_residual", "equipartition_defect", "converged", "runtime"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r[c]) if isinstance(r[c], bool) else f"{r[c]:.17g}" for c in cols))
    write_atomic(Path(cfg.out) / "sweep.csv", "\n".join(lines) + "\n")
    for r in rows:
        print(f"{key} = {r[key]:<10g} action = {r['action']:.12f}  residual = {r['el_residual']:.3e}  "
              f"defect = {r['equipartition_defect']:.3e}")
    summary = {"key": key, "values": values, "actions": [r["action"] for r in rows]}
    if key == "h":
        actions = [r["action"] for r in rows]
        ref = reference_energy(rows[0]["potential"])
        if ref is not None:
            errors = [abs(a - ref) for a in actions]
            orders = observed_orders(values, errors)
            print(f"observed order (action error vs reference {ref:.12f}): "
                  + ", ".join(f"{o:.3f}" for o in orders))
        elif len(actions) >= 3:
            orders = []
            for a1, a2, a3, h1, h2 in zip(actions, actions[1:], actions[2:], values, values[1:]):
                d1, d2 = a1 - a2, a2 - a3
                orders.append(math.log(abs(d1 / d2)) / math.log(h1 / h2) if d1 and d2 else math.nan)
            print("observed order (Richardson): " + ", ".join(f"{o:.3f}" for o in orders))
        else:
            orders = []
            print("observed order: needs a reference energy or at least 3 points")
        summary["orders"] = orders
        for col in ("consistency_residual", "equipartition_defect"):
            o = observed_orders(values, [r[col] for r in rows])
            summary[f"{col}_orders"] = o
            print(f"observed order ({col}): " + ", ".join(f"{v:.3f}" for v in o))
    else:
        spread = max(summary["actions"]) - min(summary["actions"])
        summary["action_spread"] = spread
        print(f"action spread across seeds: {spread:.3e}")
    if not all(r["converged"] for r in rows):
        print("sweep: at least one run did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# Reflect, compare, catalog
# ---------------------------------------------------------------------------

def cmd_reflect(cfg: RunConfig, samples: int = 2001) -> int:
    """Tabulate ``W`` and its reflection along the line through both wells."""
    try:
        p = resolve_potential(cfg)
        q = reflect_potential(p)
    except (ConfigError, HeteroclinicError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    hp = p.hypothesis
    t = np.linspace(-1.5, 2.5, samples)
    U = p.minus_minimum[None, :] + t[:, None] * (p.plus_minimum - p.minus_minimum)[None, :]
    W, Wr = p.eval(U), q.eval(U)
    inside = hp.omega.contains(U)
    identical_inside = bool(np.all(W[inside] == Wr[inside]))
    floor_outside = float(Wr[~inside].min()) if (~inside).any() else math.inf
    ok = identical_inside and floor_outside >= hp.w_max - 1e-12
    cols = [f"u{k + 1}" for k in range(p.dimension)] + ["W", "W_reflected", "inside_omega"]
    lines = [",".join(cols)]
    for u, a, b, ins in zip(U, W, Wr, inside):
        lines.append(",".join([f"{v:.17g}" for v in u] + [f"{a:.17g}", f"{b:.17g}", str(bool(ins)).lower()]))
    out = Path(cfg.out)
    write_atomic(out / "reflect.csv", "\n".join(lines) + "\n")
    write_atomic(out / "reflect.json", dumps_json({
        "potential": potential_summary(p),
        "w_max": hp.w_max,
        "identical_inside_omega": identical_inside,
        "min_reflected_outside_omega": floor_outside,
        "pass": ok,
    }))
    print(f"identical inside omega: {identical_inside}; min reflected W outside omega: {floor_outside:.6g} "
          f"(w_max = {hp.w_max})")
    return EXIT_OK if ok else EXIT_VERIFY


def compare_with_oracles(path: DiscretePath, p: Potential, delta: float = 1e-4,
                         energy_tol: float = 5e-4, profile_tol: float = 1e-3) -> dict:
    """Energy and recentered sup-norm profile error against the available oracles."""
    base = p.source if p.reflected and p.source is not None else p
    E = build_report(path, p).final_action.total
    out = {"action": E, "oracles": {}}
    candidates = []
    if base.name == "quartic1d":
        candidates.append(("closed_form", closed_form_result()))
    try:
        candidates.append(("phase_plane", phase_plane_profile(base, delta=delta)))
    except HeteroclinicError as exc:
        out["oracles"]["phase_plane"] = {"error": f"{type(exc).__name__}: {exc}", "pass": False}
    for name, res in candidates:
        ref = res.to_path(path.grid)
        try:
            ref, _ = recenter(ref, p, p.hypothesis.alpha0)
        except EmptyControlSet:
            pass
        err = sup_distance(path, ref)
        energy_err = abs(E - res.energy)
        out["oracles"][name] = {
            "energy": res.energy,
            "energy_error": energy_err,
            "profile_sup_error": err,
            "delta": res.delta,
            "span": list(res.span),
            "pass": energy_err <= energy_tol and err <= profile_tol,
        }
    out["all_pass"] = bool(out["oracles"]) and all(o["pass"] for o in out["oracles"].values())
    return out


def cmd_compare(cfg: RunConfig, solution: str | None = None, delta: float = 1e-4) -> int:
    try:
        if solution is not None:
            p = resolve_potential(cfg)
            if p.hypothesis.mode is Mode.LOCALIZED:
                p = reflect_potential(p)
            path = read_path_csv(solution)
        else:
            res = run_solver(cfg)
            path, p = res.path, res.potential
    except (ConfigError, SchemaError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HeteroclinicError as exc:
        print(f"solve failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    result = compare_with_oracles(path, p, delta=delta)
    for name, o in result["oracles"].items():
        if "error" in o:
            print(f"{name:<12} FAIL  {o['error']}")
        else:
            print(f"{name:<12} {'PASS' if o['pass'] else 'FAIL'}  energy error {o['energy_error']:.3e}  "
                  f"profile sup error {o['profile_sup_error']:.3e}")
    write_atomic(Path(cfg.out) / "compare.json", dumps_json(result))
    return EXIT_OK if result["all_pass"] else EXIT_VERIFY


def cmd_catalog(as_json: bool = False) -> int:
    rows = []
    for name, p in sorted(builtin_catalog().items()):
        hp = p.hypothesis
        rows.append({
            "name": name,
            "dimension": p.dimension,
            "minus_minimum": p.minus_minimum.tolist(),
            "plus_minimum": p.plus_minimum.tolist(),
            "mode": hp.mode.value,
            "alpha0": hp.alpha0,
            "gamma": hp.gamma,
            "w0": hp.w0,
            "M": constant_m(p),
            "conforming": p.conforming,
        })
    if as_json:
        print(dumps_json(rows), end="")
        return EXIT_OK
    for r in rows:
        print(f"{r['name']:<16} N={r['dimension']}  a-={r['minus_minimum']}  a+={r['plus_minimum']}  "
              f"mode={r['mode']:<10} alpha0={r['alpha0']:<5g} gamma={r['gamma']:g} w0={r['w0']:g}  "
              f"M={r['M']:.6f}  conforming={r['conforming']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argparse
# ---------------------------------------------------------------------------

_OVERRIDE_FLAGS = {
    "potential": str, "L": float, "m": int, "h": float, "solver": str, "seed": str, "epsilon": float,
    "offset": float, "max_iters": int, "grad_tol": float, "action_tol": float, "recenter_period": int,
    "history_size": int, "method": str, "dt": float, "steps": int, "residual_tol": float,
    "defect_tol": float, "rng_seed": int, "out": str,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are config errors (exit 1); argparse would use 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_config_args(sp: argparse.ArgumentParser, skip=()) -> None:
    sp.add_argument("--config", help="flat key=value or JSON run config")
    for name, typ in _OVERRIDE_FLAGS.items():
        if name in skip:
            continue
        flag = "--" + name.replace("_", "-")
        sp.add_argument(flag, dest=name, type=typ, default=None)
    sp.add_argument("--no-projection", dest="projection", action="store_const", const=False, default=None)
    sp.add_argument("--set", dest="extra", action="append", default=[], metavar="KEY=VALUE",
                    help="any config key, e.g. --set polynomial='{...}'")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="heteroclinic", description="Heteroclinic connections by action minimisation")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="minimise the action and write solution.csv / report.json")
    _add_config_args(sp)

    sp = sub.add_parser("verify", help="run every a posteriori check on a stored solution")
    sp.add_argument("solution")
    _add_config_args(sp)

    sp = sub.add_parser("sweep", help="grid-refinement or seed-width sweep")
    _add_config_args(sp, skip=("h", "epsilon"))
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--h", dest="sweep_h", type=float, nargs="+")
    group.add_argument("--epsilon", dest="sweep_eps", type=float, nargs="+")

    sp = sub.add_parser("reflect", help="tabulate W and its coercive reflection")
    _add_config_args(sp)
    sp.add_argument("--samples", type=int, default=2001)

    sp = sub.add_parser("compare", help="compare a solution with the reference oracles")
    _add_config_args(sp)
    sp.add_argument("--solution", default=None, help="stored solution.csv (solves first when omitted)")
    sp.add_argument("--delta", type=float, default=1e-4)

    sp = sub.add_parser("catalog", help="list built-in potentials")
    sp.add_argument("--json", action="store_true")
    return ap


def _config_from_args(args) -> RunConfig:
    overrides = {name: getattr(args, name, None) for name in list(_OVERRIDE_FLAGS) + ["projection"]}
    for item in args.extra:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_value(value)
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        return cmd_catalog(args.json)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "solve":
        return cmd_solve(cfg)
    if args.command == "verify":
        return cmd_verify(args.solution, cfg)
    if args.command == "sweep":
        return cmd_sweep(cfg, hs=args.sweep_h, epsilons=args.sweep_eps)
    if args.command == "reflect":
        return cmd_reflect(cfg, args.samples)
    if args.command == "compare":
        return cmd_compare(cfg, args.solution, args.delta)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
