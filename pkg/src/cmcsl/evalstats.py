"""Evaluation metric and classifier-comparison statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ._validation import DataError, check_labels

__all__ = [
    "TestOutcome",
    "balanced_accuracy",
    "betainc_regularized",
    "f_cdf",
    "f_sf",
    "combined_5x2cv_f_test",
    "signed_rank_null_counts",
    "wilcoxon_signed_rank",
    "mean_ranks",
]


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    alpha: float = 0.05

    __test__ = False  # not a pytest test class

    @property
    def significant(self):
        return self.p_value < self.alpha


def balanced_accuracy(y_true, y_pred, n_classes=None):
    """Mean per-class recall over the classes present in ``y_true``."""
    y_true = check_labels(y_true, n_classes=n_classes, name="y_true")
    y_pred = check_labels(y_pred, n_samples=y_true.shape[0], name="y_pred")
    if y_true.size == 0:
        raise DataError("balanced accuracy of an empty label vector is undefined")
    recalls = [np.mean(y_pred[y_true == k] == k) for k in np.unique(y_true)]
    return float(np.mean(recalls))


# --------------------------------------------------------------------------
# F distribution via the regularized incomplete beta function

_CF_MAX_ITER = 10_000
_CF_EPS = 1e-16
_TINY = 1e-300


def _beta_cf(a, b, x):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_cdf(f, dfn, dfd):
    if f <= 0:
        return 0.0
    if math.isinf(f):
        return 1.0
    return betainc_regularized(dfn / 2.0, dfd / 2.0, dfn * f / (dfn * f + dfd))


def f_sf(f, dfn, dfd):
    """Upper tail ``P(F > f)``, computed without cancellation."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc_regularized(dfd / 2.0, dfn / 2.0, dfd / (dfd + dfn * f))


def combined_5x2cv_f_test(scores_a, scores_b, alpha=0.05):
    """Combined 5x2 CV F-test on two ``(repeats, 2)`` score matrices.

    With per-fold differences ``p_ij`` and per-repeat variances
    ``s_i^2 = sum_j (p_ij - mean_i)^2`` the statistic is
    ``sum p_ij^2 / (2 sum s_i^2)``, referred to ``F(2r, r)``.  When the
    differences are all zero the result is ``(0, 1)``; when they are nonzero
    but every repeat has zero variance it is ``(inf, 0)``.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 2:
        raise DataError(f"expected two (repeats, 2) score matrices, got {a.shape} and {b.shape}")
    p = a - b
    num = float(np.sum(p * p))
    s2 = float(np.sum((p - p.mean(axis=1, keepdims=True)) ** 2))
    r = a.shape[0]
    if num == 0.0:
        return TestOutcome(0.0, 1.0, alpha)
    if s2 == 0.0:
        return TestOutcome(math.inf, 0.0, alpha)
    stat = num / (2.0 * s2)
    return TestOutcome(stat, f_sf(stat, 2 * r, r), alpha)


# --------------------------------------------------------------------------
# Wilcoxon signed-rank


def signed_rank_null_counts(doubled_ranks):
    """Count sign assignments per value of ``2 * W+``.

    ``doubled_ranks`` are integer-valued ``2 * rank`` (average ranks are
    multiples of 1/2).  Entry ``t`` of the result is the number of the
    ``2^m`` assignments whose positive ranks sum to ``t / 2``.
    """
    ranks = [int(r) for r in doubled_ranks]
    counts = np.zeros(sum(ranks) + 1, dtype=object)
    counts[0] = 1
    top = 0
    for r in ranks:
        counts[r:top + r + 1] = counts[r:top + r + 1] + counts[:top + 1].copy()
        top += r
    return counts


def wilcoxon_signed_rank(x, y=None, alpha=0.05, exact_max=20):
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied magnitudes get average ranks.  The
    statistic is ``min(W+, W-)``.  For at most ``exact_max`` nonzero
    differences the p-value is exact over all sign assignments; otherwise a
    normal approximation with tie and continuity corrections is used.
    """
    d = np.asarray(x, dtype=np.float64)
    if y is not None:
        yv = np.asarray(y, dtype=np.float64)
        if yv.shape != d.shape:
            raise DataError(f"paired samples differ in length: {d.shape} vs {yv.shape}")
        d = d - yv
    if d.ndim != 1 or d.size == 0:
        raise DataError("at least one paired observation is required")
    d = d[d != 0]
    m = d.size
    if m == 0:
        return TestOutcome(0.0, 1.0, alpha)
    ranks = rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if m <= exact_max:
        counts = signed_rank_null_counts(np.rint(2 * ranks))
        tail = int(sum(counts[: int(round(2 * stat)) + 1]))
        p = min(1.0, 2.0 * tail / 2 ** m)
    else:
        mu = m * (m + 1) / 4.0
        _, tie_sizes = np.unique(ranks, return_counts=True)
        var = m * (m + 1) * (2 * m + 1) / 24.0 - np.sum(tie_sizes ** 3 - tie_sizes) / 48.0
        z = max(abs(stat - mu) - 0.5, 0.0) / math.sqrt(var)
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return TestOutcome(stat, p, alpha)


def mean_ranks(score_table):
    """Mean rank per method over datasets; higher score earns a higher rank.

    ``score_table`` has one row per method and one column per dataset.  Ties
    share the average rank.
    """
    table = np.asarray(score_table, dtype=np.float64)
    if table.ndim != 2 or not np.all(np.isfinite(table)):
        raise DataError("score table must be a complete 2-D matrix")
    ranks = np.apply_along_axis(rankdata, 0, table)
    return ranks.mean(axis=1)
