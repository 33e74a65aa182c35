"""Training binary linear classifiers under positive-prediction-rate
constraints by substituting an empirical quantile for the threshold.

The public surface re-exports the working set: core types, the four
quantile estimators, surrogate losses and their gradients, SGD
training, threshold calibration and precision metrics, dataset I/O
and synthesis, the regularized logistic baseline, experiment presets,
and the concentration-scaling harnesses.
"""

from .baseline import BaselineResult, baseline_with_threshold, logistic_train
from .concentration import (
    ConcentrationReport,
    ConvexConvergenceReport,
    convex_sgd_convergence,
    estimator_stability,
    loss_uniform_deviation,
)
from .data import (
    GENERATOR_NAME,
    MixtureComponent,
    SplitSpec,
    StandardizeTransform,
    SyntheticSpec,
    generate_mixture,
    generate_synthetic,
    load_delimited,
    load_sparse,
    split,
    standardize,
)
from .errors import (
    BatchTooLarge,
    ConstraintBatchEmpty,
    DegenerateInterval,
    DegenerateSplit,
    DimensionError,
    EmptyInput,
    EmptyObjective,
    InfeasibleOnTies,
    InvalidSpec,
    NoConstraintSubset,
    NonMonotonicIndex,
    NonpositiveScale,
    ParseError,
    QuantrateError,
    RaggedRows,
    SingleClass,
    UncalibratedError,
    UnknownLabel,
)
from .estimators import QuantileResult, estimate, exact_quantile, order_rank
from .experiment import (
    CurvePoint,
    ExperimentResult,
    MethodAggregate,
    run_experiment,
    write_results,
)
from .losses import (
    LossValue,
    generic_rate_loss,
    logloss,
    loss_gradient,
    p_at_ppr_fp_loss,
    p_at_ppr_tp_loss,
    p_at_r_loss,
    surrogate_loss,
)
from .metrics import (
    PRPoint,
    calibrate_threshold,
    evaluate,
    pr_auc,
    pr_points,
    precision_at_rate,
    precision_at_recall,
    rate,
)
from .presets import load_preset, preset_names, published_rows, published_tables
from .train import gd_train, multi_restart_train, sgd_train
from .types import (
    FULL_BATCH,
    Dataset,
    Direction,
    EstimatorKind,
    EvalReport,
    LinearModel,
    Objective,
    Penalize,
    QuantileEstimatorSpec,
    RateConstraint,
    Subset,
    SurrogateLossSpec,
    TrainConfig,
    TrainResult,
    constraint_indices,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineResult",
    "BatchTooLarge",
    "ConcentrationReport",
    "ConstraintBatchEmpty",
    "ConvexConvergenceReport",
    "CurvePoint",
    "Dataset",
    "DegenerateInterval",
    "DegenerateSplit",
    "DimensionError",
    "Direction",
    "EmptyInput",
    "EmptyObjective",
    "EstimatorKind",
    "EvalReport",
    "ExperimentResult",
    "FULL_BATCH",
    "GENERATOR_NAME",
    "InfeasibleOnTies",
    "InvalidSpec",
    "LinearModel",
    "LossValue",
    "MethodAggregate",
    "MixtureComponent",
    "NoConstraintSubset",
    "NonMonotonicIndex",
    "NonpositiveScale",
    "Objective",
    "PRPoint",
    "ParseError",
    "Penalize",
    "QuantileEstimatorSpec",
    "QuantileResult",
    "QuantrateError",
    "RaggedRows",
    "RateConstraint",
    "SingleClass",
    "SplitSpec",
    "StandardizeTransform",
    "Subset",
    "SurrogateLossSpec",
    "SyntheticSpec",
    "TrainConfig",
    "TrainResult",
    "UncalibratedError",
    "UnknownLabel",
    "baseline_with_threshold",
    "calibrate_threshold",
    "constraint_indices",
    "convex_sgd_convergence",
    "estimate",
    "estimator_stability",
    "evaluate",
    "exact_quantile",
    "gd_train",
    "generate_mixture",
    "generate_synthetic",
    "generic_rate_loss",
    "load_delimited",
    "load_preset",
    "load_sparse",
    "logistic_train",
    "logloss",
    "loss_gradient",
    "loss_uniform_deviation",
    "multi_restart_train",
    "order_rank",
    "p_at_ppr_fp_loss",
    "p_at_ppr_tp_loss",
    "p_at_r_loss",
    "pr_auc",
    "pr_points",
    "precision_at_rate",
    "precision_at_recall",
    "preset_names",
    "published_rows",
    "published_tables",
    "rate",
    "run_experiment",
    "sgd_train",
    "split",
    "standardize",
    "surrogate_loss",
    "write_results",
]
