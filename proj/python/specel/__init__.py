"""Spectral collocation toolkit for linear elasticity on (-1, 1)^d."""

from ._core import (
    ControlOptions,
    ControlResult,
    ElasticPropagator,
    ElasticState,
    LglRule,
    Material,
    ObservabilityReport,
    Scheme,
    TensorGrid,
    TimeGridSpec,
    discrete_energy,
    energy_trace,
    legendre_eval,
    lgl_rule,
    make_grid,
    observability_threshold,
    observe_trajectory,
    solve_control,
    worst_case_ratio,
)

__all__ = [
    "ControlOptions",
    "ControlResult",
    "ElasticPropagator",
    "ElasticState",
    "LglRule",
    "Material",
    "ObservabilityReport",
    "Scheme",
    "TensorGrid",
    "TimeGridSpec",
    "discrete_energy",
    "energy_trace",
    "legendre_eval",
    "lgl_rule",
    "make_grid",
    "observability_threshold",
    "observe_trajectory",
    "solve_control",
    "worst_case_ratio",
]
