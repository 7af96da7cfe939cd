"""Heteroclinic connections between the wells of a multi-well potential by action minimisation."""

from .compactify import (
    AuditReport,
    ControlSet,
    audit_measure_bounds,
    control_set,
    enforce_interval_structure,
    enforce_localization,
    recenter,
    shift_nodes,
    straighten,
)
from .minimize import (
    DecayReport,
    DiagnosticReport,
    MinimizeConfig,
    MinimizeReport,
    Seed,
    minimize_action,
    relax_parabolic,
    triple_well_diagnostic,
    verify_decay,
)
from .oracle import (
    QUARTIC_ENERGY,
    OracleResult,
    closed_form_quartic,
    phase_plane_profile,
    scalar_energy_quadrature,
)
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
    metric_d1pq,
    read_path_csv,
    write_path_csv,
)
from .potential import (
    Ball,
    Box,
    HalfspaceIntersection,
    HypothesisParams,
    Mode,
    Potential,
    builtin_catalog,
    component_of,
    constant_m,
    distance_between_levels,
    get_potential,
    polynomial_potential,
    reflect_potential,
    verify_a1,
)

__version__ = "0.1.0"

__all__ = [
    "action",
    "action_gradient",
    "ActionBreakdown",
    "audit_measure_bounds",
    "AuditReport",
    "Ball",
    "best_affine_seed",
    "Box",
    "builtin_catalog",
    "closed_form_quartic",
    "component_of",
    "constant_m",
    "control_set",
    "ControlSet",
    "DecayReport",
    "DiagnosticReport",
    "DiscretePath",
    "distance_between_levels",
    "el_residual",
    "enforce_interval_structure",
    "enforce_localization",
    "equipartition_defect",
    "get_potential",
    "Grid",
    "HalfspaceIntersection",
    "HypothesisParams",
    "make_affine",
    "metric_d1pq",
    "minimize_action",
    "MinimizeConfig",
    "MinimizeReport",
    "Mode",
    "OracleResult",
    "phase_plane_profile",
    "polynomial_potential",
    "Potential",
    "QUARTIC_ENERGY",
    "read_path_csv",
    "recenter",
    "reflect_potential",
    "relax_parabolic",
    "scalar_energy_quadrature",
    "Seed",
    "shift_nodes",
    "straighten",
    "triple_well_diagnostic",
    "verify_a1",
    "verify_decay",
    "write_path_csv",
]
