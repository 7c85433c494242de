"""R^2 and the one-sided paired t-test."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import betainc
from sklearn.metrics import r2_score

from .errors import EvaluationError


class PairedTTest(NamedTuple):
    statistic: float
    pvalue: float
    df: int


def r_squared(y: ArrayLike, yhat: ArrayLike) -> float:
    """1 - SS_res / SS_tot."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise EvaluationError(
            f"R2 REJECTED: length mismatch ({y.shape[0]} observed, {yhat.shape[0]} predicted)."
        )
    if y.size < 2:
        raise EvaluationError("R2 REJECTED: need at least 2 observations.")
    if np.all(y == y[0]):
        raise EvaluationError("R2 REJECTED: observed values have zero variance.")
    return float(r2_score(y, yhat))


def student_t_cdf(t: float, df: int) -> float:
    """P(T <= t) for Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise EvaluationError(f"T-TEST REJECTED: df must be positive, got {df}.")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return 1.0 - tail if t >= 0 else tail


def paired_t_test(a: ArrayLike, b: ArrayLike) -> PairedTTest:
    """One-sided paired test of H1: mean(a - b) > 0.

    When the differences have zero spread the statistic is +/-inf (or 0 when
    all differences are 0) and p is 0, 1 or 0.5 accordingly.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise EvaluationError("T-TEST REJECTED: samples must be paired (equal length).")
    n = a.size
    if n < 2:
        raise EvaluationError("T-TEST REJECTED: need at least 2 pairs.")

    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean > 0:
            return PairedTTest(math.inf, 0.0, df)
        if mean < 0:
            return PairedTTest(-math.inf, 1.0, df)
        return PairedTTest(0.0, 0.5, df)

    t = mean / (sd / math.sqrt(n))
    # upper tail, taken directly from the incomplete beta
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    p = tail if t >= 0 else 1.0 - tail
    return PairedTTest(t, p, df)


__all__ = ["PairedTTest", "r_squared", "student_t_cdf", "paired_t_test"]
