"""
Entropic differencing atoms

Spatial and temporal reduced-reference entropic differences on the H and V
detail bands, using 5x5 non-overlapping blocks.
"""
import math

import numpy as np

from ..errors import TooSmallError
from ..unified import WaveletPyramid

TWO_PI_E = 2.0 * math.pi * math.e


def block_variances(band: np.ndarray, block: int = 5) -> np.ndarray:
    """Unbiased variance of each complete block; partial edge blocks are dropped"""
    rows, cols = band.shape
    nr, nc = rows // block, cols // block
    if nr == 0 or nc == 0:
        raise TooSmallError(
            f"Band of {cols}x{rows} is smaller than one {block}x{block} block",
            shape=[rows, cols], block=block,
        )
    tiles = np.asarray(band, dtype=np.float64)[: nr * block, : nc * block]
    tiles = tiles.reshape(nr, block, nc, block).transpose(0, 2, 1, 3).reshape(nr, nc, block * block)
    return np.var(tiles, axis=-1, ddof=1)


def scaled_entropy(variance: np.ndarray, noise_var: float = 0.1) -> np.ndarray:
    """Gaussian entropy proxy weighted by log(1 + variance)"""
    return np.log1p(variance) * np.log(TWO_PI_E * (variance + noise_var))


def entropic_difference(ref_band: np.ndarray, test_band: np.ndarray, block: int = 5, noise_var: float = 0.1) -> float:
    ref = scaled_entropy(block_variances(ref_band, block), noise_var)
    test = scaled_entropy(block_variances(test_band, block), noise_var)
    return float(np.mean(np.abs(ref - test)))


def _hv_difference(ref_pyr: WaveletPyramid, test_pyr: WaveletPyramid, level: int, block: int, noise_var: float) -> float:
    ref, test = ref_pyr.level(level), test_pyr.level(level)
    ed_h = entropic_difference(ref.H, test.H, block, noise_var)
    ed_v = entropic_difference(ref.V, test.V, block, noise_var)
    return (ed_h + ed_v) / 2.0


def srred_hv(
    ref_pyr: WaveletPyramid,
    test_pyr: WaveletPyramid,
    level: int = 1,
    block: int = 5,
    noise_var: float = 0.1,
) -> float:
    return _hv_difference(ref_pyr, test_pyr, level, block, noise_var)


def trred_hv(
    ref_diff_pyr: WaveletPyramid,
    test_diff_pyr: WaveletPyramid,
    level: int = 1,
    block: int = 5,
    noise_var: float = 0.1,
) -> float:
    """Entropic difference of frame-difference pyramids"""
    return _hv_difference(ref_diff_pyr, test_diff_pyr, level, block, noise_var)
