"""Sparse polynomial chaos recovery with designed preconditioners."""
from .basis import BasisSet, PolynomialFamily, eval_multivariate, eval_univariate, local_coherence_B, total_degree_indices
from .estimators import PCEFeatures, SparsePCERegressor
from .l1solve import BpdnConfig, RecoveryResult, bpdn_solve, cross_validate_epsilon
from .measure import MeasurementMatrix, assemble, column_normalize, etf_project, gram, mutual_coherence, spark_lower_bound, welch_bound
from .precond import (
    DesignConfig,
    PreconditionerDesign,
    cross_validate_lambda,
    design_preconditioner,
    gradient_P,
    minimize_P,
    objective,
    precondition_and_solve,
)
from .sampling import ChainConfig, SampleSet, coherence_optimal_samples, standard_samples, weight_matrix

__version__ = "0.1.0"

__all__ = [
    "BasisSet",
    "BpdnConfig",
    "ChainConfig",
    "DesignConfig",
    "MeasurementMatrix",
    "PCEFeatures",
    "PolynomialFamily",
    "PreconditionerDesign",
    "RecoveryResult",
    "SampleSet",
    "SparsePCERegressor",
    "assemble",
    "bpdn_solve",
    "coherence_optimal_samples",
    "column_normalize",
    "cross_validate_epsilon",
    "cross_validate_lambda",
    "design_preconditioner",
    "etf_project",
    "eval_multivariate",
    "eval_univariate",
    "gradient_P",
    "gram",
    "local_coherence_B",
    "minimize_P",
    "mutual_coherence",
    "objective",
    "precondition_and_solve",
    "spark_lower_bound",
    "standard_samples",
    "total_degree_indices",
    "weight_matrix",
    "welch_bound",
]
