"""Grover-search simulation for arbitrary initial amplitude distributions.

Two independent engines cover the same dynamics: an exact step-by-step
amplitude iterator (:mod:`groversim.core`) and a closed-form predictor
with measurement-time planning (:mod:`groversim.analytic`), plus initial
state construction (:mod:`groversim.distributions`) and a CLI
(:mod:`groversim.cli`).
"""

from .analytic import (
    ClosedFormSolution,
    DiagonalizationReport,
    MeasurementPlan,
    average_amplitudes,
    optimal_time,
    optimal_time_approx,
    optimal_time_numeric,
    phase_form,
    reconstruct,
    solve,
    solve_summary,
    success_probability_analytic,
    verify_diagonalization,
)
from .core import (
    AmplitudeState,
    SearchConfig,
    SummaryStats,
    grover_step,
    inversion_about_average,
    load_state,
    phase_flip_marked,
    post_flip_mean,
    run,
    save_state,
    state_from_dict,
    state_to_dict,
    step_shift,
    success_probability,
    summary_stats,
)
from .distributions import (
    KINDS,
    RNG_ALGORITHM,
    DistributionSpec,
    generate,
    ingest,
)
from .errors import (
    ComplexRatioError,
    GroverSimError,
    InvariantError,
    NormalizationError,
    ScalarOnlyError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeState",
    "ClosedFormSolution",
    "ComplexRatioError",
    "DiagonalizationReport",
    "DistributionSpec",
    "GroverSimError",
    "InvariantError",
    "KINDS",
    "MeasurementPlan",
    "NormalizationError",
    "RNG_ALGORITHM",
    "ScalarOnlyError",
    "SearchConfig",
    "SummaryStats",
    "ValidationError",
    "average_amplitudes",
    "generate",
    "grover_step",
    "ingest",
    "inversion_about_average",
    "load_state",
    "optimal_time",
    "optimal_time_approx",
    "optimal_time_numeric",
    "phase_flip_marked",
    "phase_form",
    "post_flip_mean",
    "reconstruct",
    "run",
    "save_state",
    "solve",
    "solve_summary",
    "state_from_dict",
    "state_to_dict",
    "step_shift",
    "success_probability",
    "success_probability_analytic",
    "summary_stats",
    "verify_diagonalization",
]
