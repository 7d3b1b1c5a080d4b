"""Benchmark targets, experiment harness and command-line interface."""
from .experiments import ExperimentResult, PhaseDiagramConfig, fit_pipeline, run_noisy_study, run_phase_diagram, run_target_study
from .targets import (
    TargetFunction,
    exact_coefficients_from_closed_form,
    make_target,
    manufactured_expansion,
    mass_spring_qoi,
    relative_error,
    rosenbrock,
)

__all__ = [
    "ExperimentResult",
    "PhaseDiagramConfig",
    "TargetFunction",
    "exact_coefficients_from_closed_form",
    "fit_pipeline",
    "make_target",
    "manufactured_expansion",
    "mass_spring_qoi",
    "relative_error",
    "rosenbrock",
    "run_noisy_study",
    "run_phase_diagram",
    "run_target_study",
]
