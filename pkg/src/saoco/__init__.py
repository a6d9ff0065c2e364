"""Strongly adaptive online convex optimization.

Expert-restart aggregation (exponential weights over a growing pool of
base learners) on top of projected OGD, Online Newton Step, and online
clipped kernel ridge regression, plus a benchmark harness for dynamic,
interval, and penalized regret on non-stationary streams.
"""

from .bench import (
    ComparatorSequence,
    Environment,
    Partition,
    RegretTrace,
    dynamic_regret,
    functional_variation,
    generate_environment,
    interval_regret,
    partition_by_variation,
    path_variation,
    penalized_regret,
)
from .errors import ConfigError, DomainError, LabelRangeError, NumericalError
from .experiments import (
    ExperimentConfig,
    config_from_dict,
    fit_loglog_slope,
    load_config,
    run_experiment,
    run_sweep,
)
from .flh import Flh, FlhRound, alive_births, expert_lifetime
from .kernels import (
    GramState,
    PenalizedBoundReport,
    effective_dimension,
    gaussian_kernel,
    gram_matrix,
    kernel_vector,
    krr_fit,
    lb_noise_level,
    log_det_ratio,
    map_density_identity_check,
    offline_penalized_optimum,
    penalized_bound_report,
    penalized_regret_lower,
    penalized_regret_upper,
)
from .learners import KrrLearner, OgdLearner, OnsLearner, project_mahalanobis
from .losses import (
    Ball,
    CurvatureCertificate,
    KernelSquaredLoss,
    LinearSquaredLoss,
    QuadraticLoss,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "ComparatorSequence",
    "ConfigError",
    "CurvatureCertificate",
    "DomainError",
    "Environment",
    "ExperimentConfig",
    "Flh",
    "FlhRound",
    "GramState",
    "KernelSquaredLoss",
    "KrrLearner",
    "LabelRangeError",
    "LinearSquaredLoss",
    "NumericalError",
    "OgdLearner",
    "OnsLearner",
    "Partition",
    "PenalizedBoundReport",
    "QuadraticLoss",
    "RegretTrace",
    "alive_births",
    "config_from_dict",
    "dynamic_regret",
    "effective_dimension",
    "expert_lifetime",
    "fit_loglog_slope",
    "functional_variation",
    "gaussian_kernel",
    "generate_environment",
    "gram_matrix",
    "interval_regret",
    "kernel_vector",
    "krr_fit",
    "lb_noise_level",
    "load_config",
    "log_det_ratio",
    "map_density_identity_check",
    "offline_penalized_optimum",
    "partition_by_variation",
    "path_variation",
    "penalized_bound_report",
    "penalized_regret",
    "penalized_regret_lower",
    "penalized_regret_upper",
    "project_mahalanobis",
    "run_experiment",
    "run_sweep",
]
