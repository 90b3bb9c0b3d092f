"""
Structural similarity atoms

MS-ESSIM over the approximation bands of a CSF-weighted pyramid, and the
PU21-domain PSNR/SSIM baselines computed on luma.
"""
from typing import Tuple

import numpy as np

from ..errors import GeometryError
from ..transfer import pq_eotf, pu21_encode, pu21_peak
from ..unified import WaveletPyramid
from .moments import moments

MS_SSIM_BETAS = np.array([0.0448, 0.2856, 0.3001, 0.2363])
MS_ESSIM_WEIGHTS = MS_SSIM_BETAS / MS_SSIM_BETAS.sum()
PSNR_CAP_DB = 100.0


def ssim_map(x: np.ndarray, y: np.ndarray, c1: float, c2: float, k: int = 9) -> np.ndarray:
    m = moments(x, y, k)
    num = (2.0 * m.mu_x * m.mu_y + c1) * (2.0 * m.cov_xy + c2)
    den = (m.mu_x * m.mu_x + m.mu_y * m.mu_y + c1) * (m.var_x + m.var_y + c2)
    return num / den


def cov_pool(quality_map: np.ndarray) -> float:
    """
    Mean penalized by spread: mu * (1 - sigma/mu) = mu - sigma, clamped to
    [0, 1]. Non-positive means score 0.
    """
    mu = float(np.mean(quality_map))
    if mu <= 0:
        return 0.0
    sigma = float(np.std(quality_map))
    return min(max(mu - sigma, 0.0), 1.0)


def ms_essim_scales(ref_pyr: WaveletPyramid, test_pyr: WaveletPyramid, window: int = 9) -> Tuple[float, ...]:
    """Per-level CoV-pooled SSIM on approximation bands, levels 1..4"""
    n = len(MS_ESSIM_WEIGHTS)
    if ref_pyr.n_levels < n or test_pyr.n_levels < n:
        raise GeometryError(f"MS-ESSIM needs {n} pyramid levels", levels=min(ref_pyr.n_levels, test_pyr.n_levels))
    scores = []
    for l in range(1, n + 1):
        # level-l approximation of a [0, 1] plane spans [0, 2^l]
        dynamic_range = 2.0 ** l
        c1 = (0.01 * dynamic_range) ** 2
        c2 = (0.03 * dynamic_range) ** 2
        scores.append(cov_pool(ssim_map(ref_pyr.level(l).A, test_pyr.level(l).A, c1, c2, window)))
    return tuple(scores)


def ms_essim(ref_pyr: WaveletPyramid, test_pyr: WaveletPyramid, window: int = 9) -> float:
    scores = np.array(ms_essim_scales(ref_pyr, test_pyr, window))
    if np.any(scores <= 0):
        return 0.0
    return float(np.prod(np.power(scores, MS_ESSIM_WEIGHTS)))


# ============================================================================
# PU21 BASELINES
# ============================================================================

def pu21_normalized(luma: np.ndarray) -> np.ndarray:
    """PQ code values -> PU21 units rescaled to [0, 1]"""
    return pu21_encode(pq_eotf(np.asarray(luma, dtype=np.float64))) / pu21_peak()


def psnr(x: np.ndarray, y: np.ndarray, peak: float = 1.0) -> float:
    mse = float(np.mean((np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)) ** 2))
    if mse <= 0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB)


def pu21_psnr(ref_luma: np.ndarray, test_luma: np.ndarray) -> float:
    return psnr(pu21_normalized(ref_luma), pu21_normalized(test_luma))


def global_ssim(x: np.ndarray, y: np.ndarray, window: int = 9) -> float:
    return float(np.mean(ssim_map(x, y, 0.01 ** 2, 0.03 ** 2, window)))


def pu21_ssim(ref_luma: np.ndarray, test_luma: np.ndarray, window: int = 9) -> float:
    return global_ssim(pu21_normalized(ref_luma), pu21_normalized(test_luma), window)
