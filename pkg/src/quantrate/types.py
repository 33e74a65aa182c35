"""Core records: datasets, models, constraints, estimator and loss specs.

Conventions used throughout the package:

* labels live in {-1, +1};
* a linear model scores x as w . x with no implicit bias;
* a prediction is positive iff score > threshold (strictly);
* a rate constraint bounds the fraction of a sample subset predicted
  positive, from below (at_least) or above (at_most).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BatchTooLarge,
    DimensionError,
    EmptyInput,
    InvalidSpec,
    NoConstraintSubset,
    NonpositiveScale,
)


class Subset(str, enum.Enum):
    """Which samples a rate constraint ranges over."""

    ALL = "all"
    POSITIVES = "positives"
    NEGATIVES = "negatives"
    INDICES = "indices"


class Direction(str, enum.Enum):
    AT_LEAST = "at_least"
    AT_MOST = "at_most"


class EstimatorKind(str, enum.Enum):
    POINT = "point"
    KERNEL = "kernel"
    LOWER_MEAN = "lower_mean"
    INTERVAL = "interval"


class Objective(str, enum.Enum):
    """Built-in surrogate objectives.

    P_AT_R penalizes negatives above the positive-score quantile
    (precision at a recall floor).  P_AT_PPR_FP / P_AT_PPR_TP penalize
    false positives / missed true positives around the all-score
    quantile (precision at a predicted-positive-rate floor).  GENERIC
    penalizes a caller-chosen side around the constraint subset's
    quantile.
    """

    P_AT_R = "p_at_r"
    P_AT_PPR_FP = "p_at_ppr_fp"
    P_AT_PPR_TP = "p_at_ppr_tp"
    GENERIC = "generic"


class Penalize(str, enum.Enum):
    NEGATIVES = "negatives"
    POSITIVES = "positives"


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int


class Dataset:
    """Feature matrix plus {-1,+1} labels, immutable once built."""

    def __init__(self, features, labels):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        if features.ndim != 2:
            raise InvalidSpec("features must be a 2-d array")
        if features.shape[0] == 0:
            raise EmptyInput("dataset needs at least one sample")
        if not np.all(np.isfinite(features)):
            raise InvalidSpec("features must be finite")
        if labels.shape != (features.shape[0],):
            raise InvalidSpec("labels must be one per sample")
        labels = labels.astype(np.int64)
        if not np.all(np.isin(labels, (-1, 1))):
            raise InvalidSpec("labels must be -1 or +1")
        features = features.copy()
        labels = labels.copy()
        features.flags.writeable = False
        labels.flags.writeable = False
        self.features = features
        self.labels = labels

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 1)

    def negative_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == -1)

    def sample(self, i: int) -> Sample:
        return Sample(self.features[i], int(self.labels[i]))

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class LinearModel:
    """Linear scorer f(x) = w . x with an optional decision threshold."""

    weights: np.ndarray
    threshold: Optional[float] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] == 0:
            raise InvalidSpec("weights must be a nonempty 1-d vector")
        if not np.all(np.isfinite(w)):
            raise InvalidSpec("weights must be finite")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.threshold is not None:
            object.__setattr__(self, "threshold", float(self.threshold))

    def score(self, features) -> float:
        x = np.asarray(features, dtype=np.float64)
        if x.shape != self.weights.shape:
            raise DimensionError(
                f"feature dim {x.shape} != weight dim {self.weights.shape}"
            )
        return float(x @ self.weights)

    def scores(self, dataset_or_matrix) -> np.ndarray:
        X = getattr(dataset_or_matrix, "features", dataset_or_matrix)
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.weights.shape[0]:
            raise DimensionError(
                f"feature matrix {X.shape} incompatible with weight dim "
                f"{self.weights.shape[0]}"
            )
        return X @ self.weights


@dataclass(frozen=True)
class RateConstraint:
    """Bound on the positive-prediction rate over a subset.

    The rate is |{i in A : f(x_i) > theta}| / |A|, with a strict
    inequality, and the constraint reads rate >= target (at_least) or
    rate <= target (at_most).
    """

    subset: Subset
    direction: Direction
    target: float
    indices: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "subset", Subset(self.subset))
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "target", float(self.target))
        if not 0.0 <= self.target <= 1.0:
            raise InvalidSpec(f"target rate {self.target} outside [0, 1]")
        if self.subset is Subset.INDICES:
            if not self.indices:
                raise InvalidSpec("subset 'indices' needs an index list")
            idx = tuple(int(i) for i in self.indices)
            if len(set(idx)) != len(idx) or min(idx) < 0:
                raise InvalidSpec("indices must be unique and nonnegative")
            object.__setattr__(self, "indices", idx)
        elif self.indices is not None:
            raise InvalidSpec("indices given but subset is not 'indices'")


def constraint_indices(dataset: Dataset, constraint: RateConstraint) -> np.ndarray:
    """Positions of the constraint subset within the dataset.

    Raises NoConstraintSubset when the selection is empty.
    """
    if constraint.subset is Subset.ALL:
        idx = np.arange(dataset.n)
    elif constraint.subset is Subset.POSITIVES:
        idx = dataset.positive_indices()
    elif constraint.subset is Subset.NEGATIVES:
        idx = dataset.negative_indices()
    else:
        idx = np.asarray(constraint.indices, dtype=np.int64)
        if idx.size and idx.max() >= dataset.n:
            raise InvalidSpec(
                f"constraint index {idx.max()} out of range for n={dataset.n}"
            )
    if idx.size == 0:
        raise NoConstraintSubset(
            f"subset {constraint.subset.value!r} selects no samples"
        )
    return idx


@dataclass(frozen=True)
class QuantileEstimatorSpec:
    """Which empirical quantile stand-in to use, plus its parameters.

    kind=point      exact order statistic (one-hot weights)
    kind=kernel     Gaussian-kernel smoothed order statistics; bandwidth
                    required; normalize=True divides weights by their sum,
                    paper_exact divides by N verbatim instead
    kind=lower_mean mean of the k smallest scores (convex relaxation)
    kind=interval   mean of the order statistics between levels k1 and k2
    """

    kind: EstimatorKind
    bandwidth: Optional[float] = None
    normalize: bool = True
    paper_exact: bool = False
    k1: Optional[float] = None
    k2: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EstimatorKind(self.kind))
        if self.kind is EstimatorKind.KERNEL:
            if self.bandwidth is None or not self.bandwidth > 0:
                raise NonpositiveScale(
                    f"kernel bandwidth must be positive, got {self.bandwidth}"
                )
            if self.paper_exact and self.normalize:
                raise InvalidSpec("paper_exact and normalize are exclusive")
        elif self.paper_exact:
            raise InvalidSpec("paper_exact applies to the kernel estimator only")
        if self.kind is EstimatorKind.INTERVAL:
            if self.k1 is None or self.k2 is None:
                raise InvalidSpec("interval estimator needs k1 and k2")
            if not (0.0 < self.k1 < self.k2 < 1.0):
                raise InvalidSpec(
                    f"interval levels must satisfy 0 < k1 < k2 < 1, "
                    f"got k1={self.k1}, k2={self.k2}"
                )


@dataclass(frozen=True)
class SurrogateLossSpec:
    """A differentiable objective: quantile estimator + logloss penalty.

    penalize selects the penalized side for the generic objective; the
    named objectives fix their own side and ignore it.
    """

    objective: Objective
    constraint: RateConstraint
    estimator: QuantileEstimatorSpec
    logloss_base: float = 2.0
    penalize: Penalize = Penalize.NEGATIVES

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "penalize", Penalize(self.penalize))
        object.__setattr__(self, "logloss_base", float(self.logloss_base))
        if not self.logloss_base > 1.0:
            raise InvalidSpec(
                f"logloss base must exceed 1, got {self.logloss_base}"
            )
        if self.objective is Objective.P_AT_R:
            if (
                self.constraint.subset is not Subset.POSITIVES
                or self.constraint.direction is not Direction.AT_LEAST
            ):
                raise InvalidSpec(
                    "p_at_r requires an at_least constraint on positives"
                )
        elif self.objective in (Objective.P_AT_PPR_FP, Objective.P_AT_PPR_TP):
            if self.constraint.subset is not Subset.ALL:
                raise InvalidSpec(
                    f"{self.objective.value} requires the constraint subset "
                    "to be all samples"
                )


FULL_BATCH = None  # sentinel: batch covers everything available


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the stochastic trainer.

    batch_size / constraint_batch_size of None mean full batch; a full
    constraint batch means "intersect the minibatch with the subset"
    (which collapses to the whole subset under full-batch descent).
    """

    learning_rate: float
    steps: int
    seed: int
    momentum: float = 0.0
    weight_decay: float = 0.0
    batch_size: Optional[int] = FULL_BATCH
    constraint_batch_size: Optional[int] = FULL_BATCH
    restarts: int = 1
    init_scale: float = 0.01
    eval_every: int = 1
    lr_decay: str = "constant"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InvalidSpec("learning_rate must be nonnegative")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidSpec("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise InvalidSpec("weight_decay must be nonnegative")
        if self.steps < 1:
            raise InvalidSpec("steps must be at least 1")
        if self.restarts < 1:
            raise InvalidSpec("restarts must be at least 1")
        if not self.init_scale > 0:
            raise NonpositiveScale("init_scale must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidSpec("batch_size must be at least 1 or full")
        if self.constraint_batch_size is not None and self.constraint_batch_size < 1:
            raise InvalidSpec("constraint_batch_size must be at least 1 or full")
        if self.eval_every < 1:
            raise InvalidSpec("eval_every must be at least 1")
        if self.lr_decay not in ("constant", "inv_sqrt"):
            raise InvalidSpec("lr_decay must be 'constant' or 'inv_sqrt'")
        if self.seed < 0:
            raise InvalidSpec("seed must be a nonnegative integer")

    def check_against(self, n: int) -> None:
        if self.batch_size is not None and self.batch_size > n:
            raise BatchTooLarge(f"batch_size {self.batch_size} > n={n}")


@dataclass(frozen=True)
class TrainResult:
    model: LinearModel
    final_train_loss: float
    loss_trace: Tuple[float, ...]
    restart_index: int
    seed_used: int


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts and rates at a fixed threshold.

    precision is None when nothing was predicted positive.
    """

    tp: int
    fp: int
    tn: int
    fn: int
    precision: Optional[float]
    recall: float
    rate: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "rate": self.rate,
            "threshold": self.threshold,
        }
