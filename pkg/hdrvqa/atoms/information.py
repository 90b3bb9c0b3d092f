"""Visual information fidelity on approximation bands"""
import numpy as np

from ..unified import WaveletPyramid
from .moments import EPS, moments

VIF_MAX = 1.0 + 1e-6
VARIANCE_FLOOR = 1e-10


def vif_noise_variance(scale: int) -> float:
    """Neural noise variance for a level-`scale` approximation of a [0, 1] plane"""
    return 2.0 * (2.0 ** scale / 1023.0) ** 2


def vif_from_bands(ref_band: np.ndarray, test_band: np.ndarray, noise_var: float, window: int = 9) -> float:
    m = moments(ref_band, test_band, window)
    var_x, var_y, cov = m.var_x, m.var_y, m.cov_xy

    # Window guards as in the usual VIF implementations: a flat reference
    # window carries no information, a flat test window has zero gain and
    # zero distortion variance, and a negative gain becomes zero gain with
    # all test variance counted as distortion.
    active = var_x > VARIANCE_FLOOR
    g = np.where(active, cov / np.where(active, var_x, 1.0), 0.0)
    var_x = np.where(active, var_x, 0.0)
    sv_sq = var_y - g * cov

    flat_test = var_y <= VARIANCE_FLOOR
    g = np.where(flat_test, 0.0, g)
    sv_sq = np.where(flat_test, 0.0, sv_sq)

    negative = g < 0
    sv_sq = np.where(negative, var_y, sv_sq)
    g = np.where(negative, 0.0, g)
    sv_sq = np.maximum(sv_sq, 0.0)

    num = float(np.sum(np.log1p(g * g * var_x / (sv_sq + noise_var))))
    den = float(np.sum(np.log1p(var_x / noise_var)))
    if den < EPS:
        return 1.0
    return min(max(num / den, 0.0), VIF_MAX)


def vif_scale(ref_pyr: WaveletPyramid, test_pyr: WaveletPyramid, scale: int, window: int = 9) -> float:
    return vif_from_bands(ref_pyr.level(scale).A, test_pyr.level(scale).A, vif_noise_variance(scale), window)
