"""Empirical quantile estimators over score vectors.

All four estimators return a :class:`QuantileResult` whose value is a
weighted average of the input scores; the weight vector is what the
surrogate-loss gradients differentiate through (weights themselves are
rank-dependent and treated as locally constant).

The canonical exact quantile at level c of N ascending order statistics
is the k-th one with k = max{ integer k >= 1 : k/N <= c }; when no such
k exists (c < 1/N) it is the minimum score.  Duplicated values occupy
multiple ranks, so ties count multiply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInterval, EmptyInput, InvalidSpec
from .types import EstimatorKind, QuantileEstimatorSpec

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuantileResult:
    """Estimate plus the weights that produced it.

    weights align with the *input* score order (not sorted order);
    support holds the input indices carrying nonzero weight.
    """

    value: float
    weights: np.ndarray
    support: np.ndarray


def _checked(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1:
        raise InvalidSpec("scores must be a 1-d vector")
    if s.size == 0:
        raise EmptyInput("empty score vector")
    if not np.all(np.isfinite(s)):
        raise InvalidSpec("scores must be finite")
    return s


def _check_level(c) -> float:
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise InvalidSpec(f"quantile level {c} outside [0, 1]")
    return c


def order_rank(n: int, c: float) -> int:
    """Largest k in 1..n with k/n <= c, or 0 when there is none.

    Floating-point guard: the defining comparison k/n <= c is enforced
    literally rather than trusting floor(c*n) at representation edges.
    """
    k = int(math.floor(c * n))
    while k + 1 <= n and (k + 1) / n <= c:
        k += 1
    while k >= 1 and k / n > c:
        k -= 1
    return max(0, min(k, n))


def exact_quantile(scores, c) -> float:
    """The canonical order-statistic quantile (see module docstring)."""
    s = _checked(scores)
    c = _check_level(c)
    k = order_rank(s.size, c)
    s_sorted = np.sort(s)
    if k == 0:
        return float(s_sorted[0])
    return float(s_sorted[k - 1])


def _result(scores, order, sorted_weights) -> QuantileResult:
    weights = np.zeros(scores.size, dtype=np.float64)
    weights[order] = sorted_weights
    support = np.flatnonzero(weights)
    value = float(weights @ scores)
    weights.flags.writeable = False
    support.flags.writeable = False
    return QuantileResult(value, weights, support)


def point_estimator(scores, c) -> QuantileResult:
    """One-hot weight on the exact-quantile order statistic.

    With ties, the weight sits on the last position of the tied run (the
    tie-broken rank), so the value still equals exact_quantile.
    """
    s = _checked(scores)
    c = _check_level(c)
    n = s.size
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    k = max(1, order_rank(n, c))
    j = k - 1
    while j + 1 < n and s_sorted[j + 1] == s_sorted[j]:
        j += 1
    w = np.zeros(n, dtype=np.float64)
    w[j] = 1.0
    return _result(s, order, w)


def _tie_broken_ranks(s_sorted: np.ndarray) -> np.ndarray:
    """1-based rank of the last element of each value's tied run."""
    n = s_sorted.size
    is_run_end = np.empty(n, dtype=bool)
    is_run_end[:-1] = s_sorted[1:] != s_sorted[:-1]
    is_run_end[-1] = True
    run_ends = np.flatnonzero(is_run_end)
    return run_ends[np.searchsorted(run_ends, np.arange(n))] + 1


def kernel_estimator(
    scores, c, bandwidth, normalize: bool = True, paper_exact: bool = False
) -> QuantileResult:
    """Gaussian-kernel weighted average of order statistics.

    Raw weights are u_i = phi_h(i*/N - c), with i* the tie-broken rank
    and phi_h the Gaussian density of scale h.  normalize=True divides
    by sum(u) (the default: value stays inside [min, max] of the
    scores); paper_exact divides by N verbatim.  The normalized weights
    are computed with a shifted exponent so that the h -> 0 limit
    degrades gracefully to a one-hot at the rank nearest c instead of
    underflowing to 0/0.
    """
    s = _checked(scores)
    c = _check_level(c)
    h = float(bandwidth)
    if not h > 0:
        raise InvalidSpec(f"bandwidth must be positive, got {bandwidth}")
    if paper_exact and normalize:
        raise InvalidSpec("paper_exact and normalize are exclusive")
    n = s.size
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    x = _tie_broken_ranks(s_sorted) / n - c
    expo = -0.5 * (x / h) ** 2
    if normalize:
        shifted = np.exp(expo - expo.max())
        w = shifted / shifted.sum()
    else:
        u = np.exp(expo) / (h * _SQRT_2PI)
        w = u / n
    return _result(s, order, w)


def lower_mean_estimator(scores, c) -> QuantileResult:
    """Mean of the k smallest scores, k = max(1, max{k : k/N <= c}).

    Lower-bounds the point estimate and makes the downstream loss convex
    for linear models.  c < 1/N falls back to k=1 (the minimum), so
    small constraint minibatches never abort training.
    """
    s = _checked(scores)
    c = _check_level(c)
    n = s.size
    k = max(1, order_rank(n, c))
    order = np.argsort(s, kind="stable")
    w = np.zeros(n, dtype=np.float64)
    w[:k] = 1.0 / k
    return _result(s, order, w)


def interval_estimator(scores, k1, k2) -> QuantileResult:
    """Average of the ascending order statistics at 1-based indices
    floor(N*k1)+1 through floor(N*k2) inclusive."""
    s = _checked(scores)
    k1 = float(k1)
    k2 = float(k2)
    if not (0.0 < k1 < k2 < 1.0):
        raise InvalidSpec(
            f"interval levels must satisfy 0 < k1 < k2 < 1, got {k1}, {k2}"
        )
    n = s.size
    lo = int(math.floor(n * k1))
    hi = int(math.floor(n * k2))
    if hi <= lo:
        raise DegenerateInterval(
            f"window ({k1}, {k2}] selects no order statistics for n={n}"
        )
    order = np.argsort(s, kind="stable")
    w = np.zeros(n, dtype=np.float64)
    w[lo:hi] = 1.0 / (hi - lo)
    return _result(s, order, w)


def estimate(spec: QuantileEstimatorSpec, scores, c) -> QuantileResult:
    """Dispatch on the estimator spec; c is ignored by INTERVAL."""
    if spec.kind is EstimatorKind.POINT:
        return point_estimator(scores, c)
    if spec.kind is EstimatorKind.KERNEL:
        return kernel_estimator(
            scores, c, spec.bandwidth, spec.normalize, spec.paper_exact
        )
    if spec.kind is EstimatorKind.LOWER_MEAN:
        return lower_mean_estimator(scores, c)
    return interval_estimator(scores, spec.k1, spec.k2)
