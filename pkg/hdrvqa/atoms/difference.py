"""Mean absolute difference atoms on approximation bands"""
import numpy as np

from ..errors import DimensionMismatchError


def mad(ref_band: np.ndarray, test_band: np.ndarray) -> float:
    if ref_band.shape != test_band.shape:
        raise DimensionMismatchError(
            f"Band shapes differ: {ref_band.shape} vs {test_band.shape}",
            ref_shape=list(ref_band.shape), test_shape=list(test_band.shape),
        )
    return float(np.mean(np.abs(np.asarray(ref_band, dtype=np.float64) - test_band)))


def mad_temporal(band_t: np.ndarray, band_prev: np.ndarray) -> float:
    """MAD between the same band of consecutive frames of one video"""
    return mad(band_t, band_prev)
