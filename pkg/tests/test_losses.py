"""Surrogate loss tests: hand-computed oracles, gradients, symmetry."""

import math

import numpy as np
import pytest

from quantrate import (
    Dataset,
    DimensionError,
    EmptyObjective,
    InvalidSpec,
    LinearModel,
    NoConstraintSubset,
    QuantileEstimatorSpec,
    RateConstraint,
    SurrogateLossSpec,
    estimate,
    generic_rate_loss,
    logloss,
    loss_gradient,
    order_rank,
    p_at_ppr_fp_loss,
    p_at_ppr_tp_loss,
    p_at_r_loss,
    surrogate_loss,
)

LN2 = math.log(2.0)
POINT = QuantileEstimatorSpec(kind="point")

# four samples at scores 1..4 under w=[1]; positives score low
HAND_X = np.array([[1.0], [2.0], [3.0], [4.0]])
HAND_Y = np.array([1, 1, -1, -1])


def hand_dataset():
    return Dataset(HAND_X, HAND_Y)


def unit_model():
    return LinearModel([1.0])


def random_dataset(rng, n_pos, n_neg, dim):
    X = rng.standard_normal((n_pos + n_neg, dim)) * 2.0
    y = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    return Dataset(X, y)


def test_logloss_values():
    assert logloss(0.0) == 1.0
    assert logloss(0.0, math.e) == pytest.approx(math.log(2.0), abs=1e-15)
    assert logloss(2.0) == pytest.approx(math.log(1 + math.e**2) / LN2, abs=1e-12)
    assert logloss(-800.0) == 0.0  # underflows cleanly, never overflows
    assert logloss(800.0) == pytest.approx(800.0 / LN2, rel=1e-12)
    with pytest.raises(InvalidSpec):
        logloss(1.0, base=1.0)


def test_p_at_r_hand_value():
    # recall 0.9 over 2 positives: rank level 0.1 gives the minimum, q=1;
    # negatives at 3 and 4 contribute z=2 and z=3
    v = p_at_r_loss(unit_model(), hand_dataset(), 0.9, POINT)
    expected = (math.log(1 + math.e**2) + math.log(1 + math.e**3)) / LN2
    assert v.value == pytest.approx(expected, abs=1e-12)
    assert v.per_sample.shape == (2,)
    assert v.value == pytest.approx(float(v.per_sample.sum()), abs=1e-12)


def test_p_at_ppr_fp_hand_value():
    # rate 0.5 over all four scores: q = 2nd statistic = 2; z = [1, 2]
    v = p_at_ppr_fp_loss(unit_model(), hand_dataset(), 0.5, POINT)
    expected = (math.log(1 + math.e) + math.log(1 + math.e**2)) / LN2
    assert v.value == pytest.approx(expected, abs=1e-12)


def test_p_at_ppr_tp_hand_value():
    # same q = 2; positives at 1 and 2 enter with flipped sign: z = [1, 0]
    v = p_at_ppr_tp_loss(unit_model(), hand_dataset(), 0.5, POINT)
    expected = (math.log(1 + math.e) + math.log(2.0)) / LN2
    assert v.value == pytest.approx(expected, abs=1e-12)


def test_generic_hand_value_at_most_penalizing_positives():
    # at_most 0.2 on negatives puts the stand-in at level 0.8 over {3,4},
    # the 1st statistic q=3; positives enter with sign -1: z = [2, 1]
    v = generic_rate_loss(
        unit_model(),
        hand_dataset(),
        RateConstraint("negatives", "at_most", 0.2),
        POINT,
        penalize="positives",
    )
    expected = (math.log(1 + math.e**2) + math.log(1 + math.e)) / LN2
    assert v.value == pytest.approx(expected, abs=1e-12)


def test_gradient_hand_value():
    # d/dw of the fp loss at w=1: (1/ln 2)(sum sigma(z_i) x_i - sum sigma * q_x)
    spec = SurrogateLossSpec(
        objective="p_at_ppr_fp",
        constraint=RateConstraint("all", "at_least", 0.5),
        estimator=POINT,
    )
    g = loss_gradient(unit_model(), hand_dataset(), spec)
    sig = lambda t: 1.0 / (1.0 + math.exp(-t))
    a3, a4 = sig(1.0), sig(2.0)
    expected = (1.0 / LN2) * (3.0 * a3 + 4.0 * a4 - (a3 + a4) * 2.0)
    assert g.shape == (1,)
    assert g[0] == pytest.approx(expected, abs=1e-12)


def test_loss_is_a_sum_not_a_mean():
    d = hand_dataset()
    v = p_at_r_loss(unit_model(), d, 0.9, POINT)
    assert v.per_sample.size == d.negative_indices().size
    assert v.value == float(v.per_sample.sum())


def test_base_conversion_scales_the_loss():
    d = hand_dataset()
    v2 = p_at_r_loss(unit_model(), d, 0.9, POINT, logloss_base=2.0)
    v4 = p_at_r_loss(unit_model(), d, 0.9, POINT, logloss_base=4.0)
    assert v4.value == pytest.approx(v2.value / 2.0, rel=1e-12)


def test_level_bounds_per_objective():
    d = hand_dataset()
    m = unit_model()
    # recall form admits c = 1, rate forms do not
    assert p_at_r_loss(m, d, 1.0, POINT).value >= 0.0
    with pytest.raises(InvalidSpec):
        p_at_r_loss(m, d, 0.0, POINT)
    with pytest.raises(InvalidSpec):
        p_at_r_loss(m, d, 1.1, POINT)
    with pytest.raises(InvalidSpec):
        p_at_ppr_fp_loss(m, d, 1.0, POINT)
    with pytest.raises(InvalidSpec):
        p_at_ppr_tp_loss(m, d, 1.0, POINT)
    # the same bounds hold through the spec-driven entry point
    spec = SurrogateLossSpec(
        objective="p_at_ppr_fp",
        constraint=RateConstraint("all", "at_least", 1.0),
        estimator=POINT,
    )
    with pytest.raises(InvalidSpec):
        surrogate_loss(m, d, spec)


def test_empty_side_errors():
    pos_only = Dataset([[1.0], [2.0]], [1, 1])
    neg_only = Dataset([[1.0], [2.0]], [-1, -1])
    m = unit_model()
    with pytest.raises(NoConstraintSubset):
        p_at_r_loss(m, neg_only, 0.5, POINT)
    with pytest.raises(EmptyObjective):
        p_at_r_loss(m, pos_only, 0.5, POINT)
    with pytest.raises(EmptyObjective):
        p_at_ppr_tp_loss(m, neg_only, 0.5, POINT)
    with pytest.raises(EmptyObjective):
        p_at_ppr_fp_loss(m, pos_only, 0.5, POINT)


def test_spec_validation():
    ok = RateConstraint("positives", "at_least", 0.5)
    with pytest.raises(InvalidSpec):
        SurrogateLossSpec(
            objective="p_at_r",
            constraint=RateConstraint("all", "at_least", 0.5),
            estimator=POINT,
        )
    with pytest.raises(InvalidSpec):
        SurrogateLossSpec(
            objective="p_at_r",
            constraint=RateConstraint("positives", "at_most", 0.5),
            estimator=POINT,
        )
    with pytest.raises(InvalidSpec):
        SurrogateLossSpec(
            objective="p_at_ppr_fp",
            constraint=RateConstraint("negatives", "at_least", 0.5),
            estimator=POINT,
        )
    with pytest.raises(InvalidSpec):
        SurrogateLossSpec(objective="p_at_r", constraint=ok, estimator=POINT,
                          logloss_base=1.0)


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        p_at_r_loss(LinearModel([1.0, 2.0]), hand_dataset(), 0.5, POINT)


def test_spec_driven_dispatch_matches_direct_calls():
    rng = np.random.default_rng(23)
    for _ in range(60):
        d = random_dataset(rng, int(rng.integers(3, 10)),
                           int(rng.integers(3, 10)), 2)
        w = rng.standard_normal(2)
        m = LinearModel(w)
        c = float(rng.uniform(0.1, 0.9))
        direct = p_at_r_loss(m, d, c, POINT).value
        spec = SurrogateLossSpec(
            objective="p_at_r",
            constraint=RateConstraint("positives", "at_least", c),
            estimator=POINT,
        )
        assert surrogate_loss(m, d, spec).value == direct
        direct = p_at_ppr_fp_loss(m, d, c, POINT).value
        spec = SurrogateLossSpec(
            objective="p_at_ppr_fp",
            constraint=RateConstraint("all", "at_least", c),
            estimator=POINT,
        )
        assert surrogate_loss(m, d, spec).value == direct
        direct = p_at_ppr_tp_loss(m, d, c, POINT).value
        spec = SurrogateLossSpec(
            objective="p_at_ppr_tp",
            constraint=RateConstraint("all", "at_least", c),
            estimator=POINT,
        )
        assert surrogate_loss(m, d, spec).value == direct
        cons = RateConstraint("negatives", "at_most", c)
        direct = generic_rate_loss(m, d, cons, POINT, penalize="positives").value
        spec = SurrogateLossSpec(
            objective="generic", constraint=cons, estimator=POINT,
            penalize="positives",
        )
        assert surrogate_loss(m, d, spec).value == direct


def test_generic_honors_index_subsets():
    d = hand_dataset()
    m = unit_model()
    # anchoring on rows {2, 3} reproduces the negatives-subset loss exactly
    by_name = generic_rate_loss(
        m, d, RateConstraint("negatives", "at_most", 0.2), POINT,
        penalize="positives",
    ).value
    by_index = generic_rate_loss(
        m, d, RateConstraint("indices", "at_most", 0.2, indices=(2, 3)), POINT,
        penalize="positives",
    ).value
    assert by_index == by_name


def test_tp_form_mirrors_fp_form_on_negated_data():
    # scoring -X with labels flipped turns missed positives into false
    # positives; matching the mirrored rank makes the two losses equal
    rng = np.random.default_rng(29)
    checked = 0
    for _ in range(300):
        n_pos = int(rng.integers(3, 15))
        n_neg = int(rng.integers(3, 15))
        N = n_pos + n_neg
        d = random_dataset(rng, n_pos, n_neg, int(rng.integers(1, 4)))
        c = float(rng.uniform(0.05, 0.95))
        k = max(1, order_rank(N, 1.0 - c))
        w = rng.standard_normal(d.dim)
        if k < 2:
            continue  # the mirrored rate would leave (0, 1)
        c_mirror = 1.0 - (N - k + 1.5) / N  # mid-gap: float-safe rank target
        mirrored = Dataset(-d.features, -d.labels)
        v_tp = p_at_ppr_tp_loss(LinearModel(w), d, c, POINT).value
        v_fp = p_at_ppr_fp_loss(LinearModel(w), mirrored, c_mirror, POINT).value
        assert v_tp == pytest.approx(v_fp, abs=1e-12)
        checked += 1
    assert checked >= 200


def test_gradient_matches_finite_differences_spot():
    rng = np.random.default_rng(31)
    specs = [
        POINT,
        QuantileEstimatorSpec(kind="kernel", bandwidth=0.2),
        QuantileEstimatorSpec(kind="lower_mean"),
        QuantileEstimatorSpec(kind="interval", k1=0.25, k2=0.75),
    ]
    done = 0
    while done < 40:
        est = specs[done % 4]
        d = random_dataset(rng, int(rng.integers(5, 12)),
                           int(rng.integers(5, 12)), 3)
        c = float(rng.uniform(0.2, 0.8))
        w = rng.standard_normal(3)
        spec = SurrogateLossSpec(
            objective="p_at_ppr_fp",
            constraint=RateConstraint("all", "at_least", c),
            estimator=est,
        )
        gaps = np.diff(np.sort(d.features @ w))
        if gaps.min() < 1e-4:
            continue  # a sort tie would flip the fixed permutation mid-step
        g = loss_gradient(LinearModel(w), d, spec)
        fd = np.empty(3)
        for j in range(3):
            eps = 1e-6 * max(1.0, abs(w[j]))
            wp = w.copy()
            wp[j] += eps
            wm = w.copy()
            wm[j] -= eps
            fd[j] = (
                surrogate_loss(LinearModel(wp), d, spec).value
                - surrogate_loss(LinearModel(wm), d, spec).value
            ) / (2 * eps)
        assert np.linalg.norm(fd - g) <= 1e-4 * max(1.0, np.linalg.norm(g))
        done += 1


def test_loss_dominates_violation_count_spot():
    rng = np.random.default_rng(37)
    for i in range(60):
        d = random_dataset(rng, int(rng.integers(4, 12)),
                           int(rng.integers(4, 12)), 2)
        c = float(rng.uniform(0.1, 0.9))
        w = rng.standard_normal(2)
        v = p_at_r_loss(LinearModel(w), d, c, POINT).value
        s = d.features @ w
        q = estimate(POINT, s[d.labels == 1], 1.0 - c).value
        count = int(np.count_nonzero(s[d.labels == -1] > q))
        assert v >= count * logloss(0.0) - 1e-9
