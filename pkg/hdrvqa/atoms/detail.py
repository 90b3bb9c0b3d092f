"""
Detail atoms

DLM-S splits test detail coefficients into a restored part and an additive
part, then compares the masked restored energy to the reference energy.
Edge measures one-sided growth of detail magnitudes.
"""
import math
from typing import Optional, Tuple

import numpy as np

from ..unified import ORIENTATIONS, WaveletPyramid
from .moments import EPS

ANGLE_TOLERANCE_DEG = 1.0
BORDER_FRACTION = 0.1


def central_region(shape: Tuple[int, int], fraction: float = BORDER_FRACTION) -> Tuple[slice, slice]:
    """Slices dropping a border of ceil(fraction * min(h, w)), keeping at least one coefficient"""
    rows, cols = shape
    border = math.ceil(fraction * min(rows, cols))
    border = min(border, (min(rows, cols) - 1) // 2)
    return slice(border, rows - border), slice(border, cols - border)


def decouple(
    ref: Tuple[np.ndarray, np.ndarray, np.ndarray],
    test: Tuple[np.ndarray, np.ndarray, np.ndarray],
) -> Tuple[Tuple[np.ndarray, ...], Tuple[np.ndarray, ...]]:
    """
    Restored and additive components of the test (H, V, D) subbands.

    Where the local orientation of test and reference agree within one
    degree the test coefficients count as fully restored; elsewhere each
    coefficient is the reference scaled by clip(T/O, 0, 1).
    """
    o_h, o_v, _ = ref
    t_h, t_v, _ = test
    psi_ref = np.degrees(np.arctan2(o_v, o_h))
    psi_test = np.degrees(np.arctan2(t_v, t_h))
    delta = np.abs((psi_ref - psi_test + 180.0) % 360.0 - 180.0)
    aligned = delta < ANGLE_TOLERANCE_DEG

    restored, additive = [], []
    for o, t in zip(ref, test):
        nonzero = o != 0
        ratio = np.where(nonzero, np.clip(t / np.where(nonzero, o, 1.0), 0.0, 1.0), 0.0)
        r = np.where(aligned, t, ratio * o)
        restored.append(r)
        additive.append(t - r)
    return tuple(restored), tuple(additive)


def _minkowski3(x: np.ndarray) -> float:
    return float(np.sum(np.abs(x) ** 3)) ** (1.0 / 3.0)


def dlm_s(ref_pyr: WaveletPyramid, test_pyr: WaveletPyramid, level: Optional[int] = None) -> float:
    """Detail loss at a single level (default: coarsest), in [0, 1]"""
    level = level or ref_pyr.n_levels
    ref_bands = ref_pyr.level(level)
    test_bands = test_pyr.level(level)
    o = tuple(getattr(ref_bands, name) for name in ORIENTATIONS)
    t = tuple(getattr(test_bands, name) for name in ORIENTATIONS)

    restored, additive = decouple(o, t)
    region = central_region(o[0].shape)
    num = den = 0.0
    for r, a, ref_band in zip(restored, additive, o):
        masked = np.maximum(np.abs(r) - np.abs(a), 0.0)
        num += _minkowski3(masked[region])
        den += _minkowski3(ref_band[region])
    if den < EPS:
        return 1.0
    return min(max(num / den, 0.0), 1.0)


def edge(ref_pyr: WaveletPyramid, test_pyr: WaveletPyramid, level: int = 1) -> float:
    """Rectified increase of detail magnitude relative to reference detail"""
    ref_bands = ref_pyr.level(level)
    test_bands = test_pyr.level(level)
    num = den = 0.0
    for name in ORIENTATIONS:
        o = np.abs(getattr(ref_bands, name))
        t = np.abs(getattr(test_bands, name))
        num += float(np.mean(np.maximum(t - o, 0.0)))
        den += float(np.mean(o))
    return num / (den + EPS)
