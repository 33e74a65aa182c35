"""Quantile estimator tests: hand oracles, tie handling, weight invariants."""

import math

import numpy as np
import pytest

from quantrate import (
    DegenerateInterval,
    EmptyInput,
    InvalidSpec,
    NonpositiveScale,
    QuantileEstimatorSpec,
    estimate,
    exact_quantile,
    order_rank,
)

POINT = QuantileEstimatorSpec(kind="point")
LOWER_MEAN = QuantileEstimatorSpec(kind="lower_mean")


def kernel_spec(h, normalize=True, paper_exact=False):
    return QuantileEstimatorSpec(
        kind="kernel", bandwidth=h, normalize=normalize, paper_exact=paper_exact
    )


def test_order_rank_hand_values():
    assert order_rank(10, 0.39) == 3
    assert order_rank(10, 0.05) == 0
    assert order_rank(10, 1.0) == 10
    assert order_rank(10, 0.0) == 0
    assert order_rank(1, 0.5) == 0
    assert order_rank(1, 1.0) == 1


def test_order_rank_float_boundaries():
    # floor(0.3 * 10) is 2 in floats; the defining comparison must win
    assert order_rank(10, 0.3) == 3
    assert order_rank(3, 1.0 / 3.0) == 1
    assert order_rank(7, 0.7) == 4
    # exact integer ratios hit their own rank for every n
    for n in range(1, 80):
        for k in range(n + 1):
            assert order_rank(n, k / n) == k


def test_order_rank_matches_brute_force():
    # brute oracle: largest k in 1..n with k/n <= c, else 0
    for n in range(1, 61):
        for c in [i / 97 for i in range(98)]:
            brute = 0
            for k in range(1, n + 1):
                if k / n <= c:
                    brute = k
            assert order_rank(n, c) == brute, (n, c)


def test_exact_quantile_hand_values():
    s = list(range(1, 11))
    assert exact_quantile(s, 0.39) == 3.0
    assert exact_quantile(s, 1.0) == 10.0
    assert exact_quantile(s, 0.0) == 1.0
    assert exact_quantile(s, 0.05) == 1.0  # k=0 falls back to the minimum
    assert exact_quantile([7.0], 0.2) == 7.0


def test_exact_quantile_ties_count_multiply():
    assert exact_quantile([1.0, 1.0, 1.0, 4.0], 0.5) == 1.0
    assert exact_quantile([1.0, 1.0, 1.0, 4.0], 0.75) == 1.0
    assert exact_quantile([1.0, 1.0, 1.0, 4.0], 1.0) == 4.0


def test_exact_quantile_input_validation():
    with pytest.raises(EmptyInput):
        exact_quantile([], 0.5)
    with pytest.raises(InvalidSpec):
        exact_quantile([1.0, 2.0], 1.5)
    with pytest.raises(InvalidSpec):
        exact_quantile([1.0, 2.0], -0.1)
    with pytest.raises(InvalidSpec):
        exact_quantile([1.0, float("nan")], 0.5)
    with pytest.raises(InvalidSpec):
        exact_quantile([[1.0, 2.0]], 0.5)


def test_point_value_equals_exact_quantile():
    rng = np.random.default_rng(7)
    for _ in range(300):
        n = int(rng.integers(1, 50))
        s = rng.standard_normal(n)
        if rng.random() < 0.4:
            s = np.round(s)  # force ties
        c = float(rng.uniform(0.0, 1.0))
        res = estimate(POINT, s, c)
        assert res.value == exact_quantile(s, c)
        assert np.count_nonzero(res.weights) == 1
        assert res.weights.sum() == 1.0


def test_point_tie_run_lands_on_last_input_position():
    # sorted([5,1,1,1,9]) puts the rank-2 statistic inside the run of 1s;
    # the one-hot weight sits on the run's final input position
    res = estimate(POINT, [5.0, 1.0, 1.0, 1.0, 9.0], 0.4)
    assert res.value == 1.0
    assert list(res.support) == [3]
    assert res.weights[3] == 1.0


def test_kernel_normalized_frozen_value():
    # independent scalar route: softmax of -(i/N - c)^2 / (2 h^2)
    res = estimate(kernel_spec(0.25), [1.0, 2.0, 3.0, 4.0], 0.5)
    assert res.value == pytest.approx(2.115257604344353, abs=1e-12)
    x = [0.25 - 0.5, 0.5 - 0.5, 0.75 - 0.5, 1.0 - 0.5]
    raw = [math.exp(-0.5 * (xi / 0.25) ** 2) for xi in x]
    expected = sum(w * v for w, v in zip(raw, [1.0, 2.0, 3.0, 4.0])) / sum(raw)
    assert res.value == pytest.approx(expected, abs=1e-12)
    assert res.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_kernel_normalized_stays_inside_score_range():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        s = rng.standard_normal(n) * rng.uniform(0.1, 5.0)
        c = float(rng.uniform(0.0, 1.0))
        h = float(rng.uniform(0.01, 2.0))
        res = estimate(kernel_spec(h), s, c)
        assert s.min() - 1e-12 <= res.value <= s.max() + 1e-12


def test_kernel_tiny_bandwidth_degrades_to_one_hot():
    res = estimate(kernel_spec(1e-12), [1.0, 2.0, 3.0, 4.0], 0.5)
    assert res.value == 2.0
    assert res.weights[1] == 1.0


def test_kernel_ties_share_the_tie_broken_rank():
    # both 7s carry rank 3/3, equidistant from c, so they split the weight
    res = estimate(kernel_spec(1e-12), [7.0, 7.0, 3.0], 0.9)
    assert res.value == 7.0
    assert res.weights[0] == pytest.approx(0.5, abs=1e-12)
    assert res.weights[1] == pytest.approx(0.5, abs=1e-12)


def test_kernel_paper_exact_frozen_value():
    res = estimate(
        kernel_spec(0.25, normalize=False, paper_exact=True),
        [1.0, 2.0, 3.0, 4.0],
        0.5,
    )
    assert res.value == pytest.approx(1.9817313249321913, abs=1e-12)
    # independent route: Gaussian density over rank gaps, divided by N
    x = [0.25 - 0.5, 0.5 - 0.5, 0.75 - 0.5, 1.0 - 0.5]
    dens = [
        math.exp(-0.5 * (xi / 0.25) ** 2) / (0.25 * math.sqrt(2 * math.pi))
        for xi in x
    ]
    expected = sum(d / 4.0 * v for d, v in zip(dens, [1.0, 2.0, 3.0, 4.0]))
    assert res.value == pytest.approx(expected, abs=1e-12)
    # weights do not sum to 1 by construction
    assert res.weights.sum() == pytest.approx(0.9368746959529074, abs=1e-12)


def test_kernel_spec_validation():
    with pytest.raises(NonpositiveScale):
        QuantileEstimatorSpec(kind="kernel", bandwidth=0.0)
    with pytest.raises(NonpositiveScale):
        QuantileEstimatorSpec(kind="kernel", bandwidth=-1.0)
    with pytest.raises(NonpositiveScale):
        QuantileEstimatorSpec(kind="kernel")
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(
            kind="kernel", bandwidth=0.1, normalize=True, paper_exact=True
        )
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(kind="point", paper_exact=True)


def test_lower_mean_hand_values():
    res = estimate(LOWER_MEAN, [4.0, 2.0, 9.0, 1.0], 0.5)
    assert res.value == 1.5  # mean of the 2 smallest
    assert list(res.support) == [1, 3]
    assert res.weights[1] == 0.5 and res.weights[3] == 0.5
    # c below 1/N falls back to the minimum instead of failing
    assert estimate(LOWER_MEAN, [4.0, 2.0, 9.0, 1.0], 0.01).value == 1.0


def test_lower_mean_matches_sorted_prefix_mean():
    rng = np.random.default_rng(13)
    for _ in range(300):
        n = int(rng.integers(1, 50))
        s = rng.standard_normal(n) * 3.0
        c = float(rng.uniform(0.0, 1.0))
        k = max(1, order_rank(n, c))
        expected = float(np.sort(s)[:k].mean())
        assert estimate(LOWER_MEAN, s, c).value == pytest.approx(
            expected, abs=1e-12
        )


def test_interval_hand_values():
    spec = QuantileEstimatorSpec(kind="interval", k1=0.39, k2=0.41)
    s = [float(v) for v in range(1, 11)]
    # window floor(10*.39)+1 .. floor(10*.41) selects the single 4th statistic
    res = estimate(spec, s, 0.5)
    assert res.value == 4.0
    assert list(res.support) == [3]
    spec2 = QuantileEstimatorSpec(kind="interval", k1=0.25, k2=0.75)
    res2 = estimate(spec2, [float(v) for v in range(1, 9)], 0.5)
    assert res2.value == 4.5  # mean of statistics 3..6
    assert res2.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_interval_ignores_level():
    spec = QuantileEstimatorSpec(kind="interval", k1=0.25, k2=0.75)
    s = np.arange(12.0)
    assert estimate(spec, s, 0.1).value == estimate(spec, s, 0.9).value


def test_interval_degenerate_window():
    spec = QuantileEstimatorSpec(kind="interval", k1=0.41, k2=0.49)
    # floor(10*.41) == floor(10*.49) == 4: no statistics in the window
    with pytest.raises(DegenerateInterval):
        estimate(spec, [float(v) for v in range(1, 11)], 0.5)


def test_interval_spec_validation():
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(kind="interval", k1=0.5, k2=0.5)
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(kind="interval", k1=0.7, k2=0.3)
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(kind="interval", k1=0.0, k2=0.5)
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(kind="interval", k1=0.5, k2=1.0)
    with pytest.raises(InvalidSpec):
        QuantileEstimatorSpec(kind="interval", k1=0.5)


def test_weights_align_with_input_order():
    rng = np.random.default_rng(17)
    specs = [
        POINT,
        LOWER_MEAN,
        kernel_spec(0.2),
        QuantileEstimatorSpec(kind="interval", k1=0.2, k2=0.8),
    ]
    for i in range(200):
        spec = specs[i % 4]
        n = int(rng.integers(5, 40))
        s = rng.standard_normal(n)
        c = float(rng.uniform(0.0, 1.0))
        res = estimate(spec, s, c)
        assert res.weights.shape == s.shape
        assert float(res.weights @ s) == pytest.approx(res.value, abs=1e-12)
        assert list(res.support) == list(np.flatnonzero(res.weights))
        assert not res.weights.flags.writeable


def test_weights_permute_with_the_input():
    rng = np.random.default_rng(19)
    s = rng.standard_normal(15)  # distinct with probability 1
    perm = rng.permutation(15)
    for spec in (POINT, LOWER_MEAN, kernel_spec(0.3)):
        base = estimate(spec, s, 0.6)
        moved = estimate(spec, s[perm], 0.6)
        assert moved.value == pytest.approx(base.value, abs=1e-12)
        assert np.allclose(moved.weights, base.weights[perm], atol=1e-15)


def test_estimate_rejects_bad_scores():
    with pytest.raises(EmptyInput):
        estimate(POINT, [], 0.5)
    with pytest.raises(InvalidSpec):
        estimate(POINT, [np.inf, 1.0], 0.5)
