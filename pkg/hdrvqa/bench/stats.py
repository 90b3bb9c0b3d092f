"""Accuracy metrics between predictions and subjective scores"""
import math
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from ..errors import UndefinedCorrelationError

MIN_SAMPLES = 3


def _pair(a: Sequence[float], b: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise UndefinedCorrelationError(f"Vectors must be 1-D and equal length, got {x.shape} and {y.shape}")
    if x.size < MIN_SAMPLES:
        raise UndefinedCorrelationError(f"Need at least {MIN_SAMPLES} samples, got {x.size}", n=int(x.size))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise UndefinedCorrelationError("Vectors contain non-finite values")
    return x, y


def pcc(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Pearson product-moment correlation.

    Raises:
        UndefinedCorrelationError: constant input, fewer than three samples
            or mismatched lengths
    """
    x, y = _pair(a, b)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("Correlation is undefined for a constant vector")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(max(r, -1.0), 1.0)


def srocc(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman correlation: PCC of average ranks"""
    x, y = _pair(a, b)
    return pcc(rankdata(x), rankdata(y))


def rmse(a: Sequence[float], b: Sequence[float]) -> float:
    x, y = _pair(a, b)
    return math.sqrt(float(np.mean((x - y) ** 2)))


def lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    if not ordered:
        raise UndefinedCorrelationError("Median of an empty series")
    return float(ordered[(len(ordered) - 1) // 2])
