"""Quantile surrogate losses and their fixed-permutation gradients.

Substituting a quantile estimate of the constraint subset's scores for
the decision threshold turns a rate-constrained problem into an
unconstrained sum of loglosses over the penalized side.  Losses are
reported as sums, not means; the optimizer rescales internally.

Gradients flow through the score values only: the estimator's weight
vector depends on the sort permutation, which is held fixed where the
loss is differentiable (subgradient convention at ties).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import (
    DimensionError,
    EmptyObjective,
    InvalidSpec,
    NoConstraintSubset,
)
from .estimators import estimate
from .types import (
    Dataset,
    LinearModel,
    Objective,
    Penalize,
    QuantileEstimatorSpec,
    RateConstraint,
    SurrogateLossSpec,
    constraint_indices,
)


@dataclass(frozen=True)
class LossValue:
    """Summed surrogate loss plus the per-sample summands."""

    value: float
    per_sample: Optional[np.ndarray] = None


def logloss(z: float, base: float = 2.0) -> float:
    """log_base(1 + e^z), overflow-safe for any z."""
    base = float(base)
    if not base > 1.0:
        raise InvalidSpec(f"logloss base must exceed 1, got {base}")
    return float(np.logaddexp(0.0, z) / math.log(base))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _side(penalize: Penalize) -> Tuple[int, float]:
    """Penalized label and the sign s in l(s * (f(x) - theta))."""
    if penalize is Penalize.NEGATIVES:
        return -1, 1.0
    return +1, -1.0


def _objective_side(spec: SurrogateLossSpec) -> Penalize:
    if spec.objective is Objective.P_AT_PPR_TP:
        return Penalize.POSITIVES
    if spec.objective is Objective.GENERIC:
        return spec.penalize
    return Penalize.NEGATIVES


def core_eval(
    w: np.ndarray,
    X_pen: np.ndarray,
    X_sub: np.ndarray,
    sign: float,
    level: float,
    est_spec: QuantileEstimatorSpec,
    base: float,
    want_grad: bool = False,
):
    """Loss (and optionally gradient) of one penalized/subset matrix pair.

    Accepts an empty penalized matrix (contributes zero); the subset
    must be nonempty because the estimator needs scores.
    Returns (value, per_sample, grad_or_None).
    """
    ln_base = math.log(base)
    if X_sub.shape[1] != w.shape[0]:
        raise DimensionError(
            f"feature dim {X_sub.shape[1]} != weight dim {w.shape[0]}"
        )
    sub_scores = X_sub @ w
    q = estimate(est_spec, sub_scores, level)
    if X_pen.shape[0] == 0:
        grad = np.zeros_like(w) if want_grad else None
        return 0.0, np.zeros(0), grad
    z = sign * (X_pen @ w - q.value)
    per_sample = _softplus(z) / ln_base
    value = float(per_sample.sum())
    grad = None
    if want_grad:
        a = _sigmoid(z)
        anchor = q.weights @ X_sub
        grad = (sign / ln_base) * (X_pen.T @ a - a.sum() * anchor)
    return value, per_sample, grad


def _check_c(c: float, *, open_top: bool) -> float:
    c = float(c)
    hi_ok = c < 1.0 if open_top else c <= 1.0
    if not (0.0 < c and hi_ok):
        top = "1 (exclusive)" if open_top else "1"
        raise InvalidSpec(f"target rate must lie in (0, {top}], got {c}")
    return c


def p_at_r_loss(
    model: LinearModel,
    dataset: Dataset,
    c: float,
    estimator_spec: QuantileEstimatorSpec,
    logloss_base: float = 2.0,
) -> LossValue:
    """Precision-at-recall surrogate: quantile of the positives' scores
    at level 1-c, logloss summed over negatives above it."""
    c = _check_c(c, open_top=False)
    pos = dataset.positive_indices()
    if pos.size == 0:
        raise NoConstraintSubset("p_at_r needs at least one positive")
    neg = dataset.negative_indices()
    if neg.size == 0:
        raise EmptyObjective("p_at_r penalizes negatives; none present")
    value, per_sample, _ = core_eval(
        model.weights,
        dataset.features[neg],
        dataset.features[pos],
        1.0,
        1.0 - c,
        estimator_spec,
        logloss_base,
    )
    return LossValue(value, per_sample)


def p_at_ppr_fp_loss(
    model: LinearModel,
    dataset: Dataset,
    c: float,
    estimator_spec: QuantileEstimatorSpec,
    logloss_base: float = 2.0,
) -> LossValue:
    """False-positive-side surrogate at a predicted-positive rate c:
    quantile over all scores at level 1-c, logloss over negatives."""
    c = _check_c(c, open_top=True)
    neg = dataset.negative_indices()
    if neg.size == 0:
        raise EmptyObjective("fp-side loss penalizes negatives; none present")
    value, per_sample, _ = core_eval(
        model.weights,
        dataset.features[neg],
        dataset.features,
        1.0,
        1.0 - c,
        estimator_spec,
        logloss_base,
    )
    return LossValue(value, per_sample)


def p_at_ppr_tp_loss(
    model: LinearModel,
    dataset: Dataset,
    c: float,
    estimator_spec: QuantileEstimatorSpec,
    logloss_base: float = 2.0,
) -> LossValue:
    """True-positive-side surrogate at a predicted-positive rate c:
    same quantile as the fp form, logloss over positives below it."""
    c = _check_c(c, open_top=True)
    pos = dataset.positive_indices()
    if pos.size == 0:
        raise EmptyObjective("tp-side loss penalizes positives; none present")
    value, per_sample, _ = core_eval(
        model.weights,
        dataset.features[pos],
        dataset.features,
        -1.0,
        1.0 - c,
        estimator_spec,
        logloss_base,
    )
    return LossValue(value, per_sample)


def generic_rate_loss(
    model: LinearModel,
    dataset: Dataset,
    constraint: RateConstraint,
    estimator_spec: QuantileEstimatorSpec,
    penalize: Penalize = Penalize.NEGATIVES,
    logloss_base: float = 2.0,
) -> LossValue:
    """Surrogate for an arbitrary rate constraint.

    The threshold stand-in is the estimator at level 1-target over the
    constraint subset's scores (both directions; the exact calibrator
    handles the at_most tie adjustment after training).
    """
    penalize = Penalize(penalize)
    sub = constraint_indices(dataset, constraint)
    label, sign = _side(penalize)
    pen = np.flatnonzero(dataset.labels == label)
    if pen.size == 0:
        raise EmptyObjective(f"no samples with label {label} to penalize")
    value, per_sample, _ = core_eval(
        model.weights,
        dataset.features[pen],
        dataset.features[sub],
        sign,
        1.0 - constraint.target,
        estimator_spec,
        logloss_base,
    )
    return LossValue(value, per_sample)


def _resolved(spec: SurrogateLossSpec, dataset: Dataset):
    """(subset idx, penalized idx, sign, level) for a loss spec."""
    sub = constraint_indices(dataset, spec.constraint)
    side = _objective_side(spec)
    label, sign = _side(side)
    pen = np.flatnonzero(dataset.labels == label)
    if pen.size == 0:
        raise EmptyObjective(f"no samples with label {label} to penalize")
    if spec.objective is Objective.P_AT_R:
        _check_c(spec.constraint.target, open_top=False)
    elif spec.objective in (Objective.P_AT_PPR_FP, Objective.P_AT_PPR_TP):
        _check_c(spec.constraint.target, open_top=True)
    return sub, pen, sign, 1.0 - spec.constraint.target


def surrogate_loss(
    model: LinearModel, dataset: Dataset, loss_spec: SurrogateLossSpec
) -> LossValue:
    """Spec-driven dispatch over the four objectives."""
    sub, pen, sign, level = _resolved(loss_spec, dataset)
    value, per_sample, _ = core_eval(
        model.weights,
        dataset.features[pen],
        dataset.features[sub],
        sign,
        level,
        loss_spec.estimator,
        loss_spec.logloss_base,
    )
    return LossValue(value, per_sample)


def loss_gradient(
    model: LinearModel, dataset: Dataset, loss_spec: SurrogateLossSpec
) -> np.ndarray:
    """Gradient of surrogate_loss in the model weights.

    For penalized set P with sign s this is
    sum_{i in P} sigma(s*(f(x_i) - theta)) * s * (x_i - x_bar) / ln(base)
    with x_bar the estimator's weighted support point over the subset.
    """
    sub, pen, sign, level = _resolved(loss_spec, dataset)
    _, _, grad = core_eval(
        model.weights,
        dataset.features[pen],
        dataset.features[sub],
        sign,
        level,
        loss_spec.estimator,
        loss_spec.logloss_base,
        want_grad=True,
    )
    return grad
