"""Optimal timer-based best-node selection: closed forms, solvers and simulation."""

from app.selection.analysis import (
    AnalysisResult,
    analyze,
    asymptotic_expected_time,
    asymptotic_success_probability,
    auxiliary_value,
    expected_selection_time,
    success_probability,
)
from app.selection.baselines import BaselineConfig, Objective, inverse_mapping, optimize_c
from app.selection.errors import (
    ConstraintUnmeetable,
    Infeasible,
    MappingFormatError,
    NumericalFailure,
    SelectionError,
    ValidationError,
)
from app.selection.model import (
    AsymptoticMapping,
    ContinuousMapping,
    DiscreteMapping,
    InverseMetric,
    LinearDecay,
    MetricDistribution,
    NoTransmit,
    SelectionParams,
    derive_params,
    evaluate_timer,
    parse_distribution,
    uniformize,
)
from app.selection.scheme1 import Scheme1Solution, optimize_asymptotic, optimize_finite
from app.selection.scheme2 import (
    Scheme2Solution,
    minimize_auxiliary_asymptotic,
    minimize_auxiliary_finite,
    solve_constrained,
)
from app.selection.simulator import (
    SelectionOutcome,
    SimStats,
    TimeConvention,
    discretize_mapping,
    estimate,
    run_trial,
)

__all__ = [
    # model
    "SelectionParams",
    "DiscreteMapping",
    "AsymptoticMapping",
    "ContinuousMapping",
    "InverseMetric",
    "LinearDecay",
    "MetricDistribution",
    "NoTransmit",
    "derive_params",
    "uniformize",
    "evaluate_timer",
    "parse_distribution",
    # analysis
    "AnalysisResult",
    "analyze",
    "success_probability",
    "expected_selection_time",
    "auxiliary_value",
    "asymptotic_success_probability",
    "asymptotic_expected_time",
    # schemes
    "Scheme1Solution",
    "optimize_finite",
    "optimize_asymptotic",
    "Scheme2Solution",
    "minimize_auxiliary_finite",
    "minimize_auxiliary_asymptotic",
    "solve_constrained",
    # simulation
    "SelectionOutcome",
    "SimStats",
    "TimeConvention",
    "run_trial",
    "estimate",
    "discretize_mapping",
    # baselines
    "BaselineConfig",
    "Objective",
    "inverse_mapping",
    "optimize_c",
    # errors
    "SelectionError",
    "ValidationError",
    "MappingFormatError",
    "Infeasible",
    "ConstraintUnmeetable",
    "NumericalFailure",
]
