"""Local moments over k x k square windows via integral images"""
from typing import NamedTuple

import numpy as np

# Denominator guard shared by every ratio-type atom
EPS = 1e-12


class MomentMaps(NamedTuple):
    mu_x: np.ndarray
    mu_y: np.ndarray
    var_x: np.ndarray
    var_y: np.ndarray
    cov_xy: np.ndarray


def integral_image(x: np.ndarray) -> np.ndarray:
    rows, cols = x.shape
    out = np.zeros((rows + 1, cols + 1))
    out[1:, 1:] = np.cumsum(np.cumsum(x, 0), 1)
    return out


def _window_mean(x_pad: np.ndarray, k: int) -> np.ndarray:
    s = integral_image(x_pad)
    return (s[:-k, :-k] - s[:-k, k:] - s[k:, :-k] + s[k:, k:]) / (k * k)


def moments(x: np.ndarray, y: np.ndarray, k: int = 9) -> MomentMaps:
    """
    Windowed mean, variance and covariance maps, same size as the input.
    Borders are reflect-padded. Negative variances are clamped to 0 and the
    matching covariances zeroed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = k // 2
    x_pad = np.pad(x, r, mode="reflect")
    y_pad = np.pad(y, r, mode="reflect")

    mu_x = _window_mean(x_pad, k)
    mu_y = _window_mean(y_pad, k)
    var_x = _window_mean(x_pad * x_pad, k) - mu_x * mu_x
    var_y = _window_mean(y_pad * y_pad, k) - mu_y * mu_y
    cov_xy = _window_mean(x_pad * y_pad, k) - mu_x * mu_y

    mask_x = var_x < 0
    mask_y = var_y < 0
    var_x[mask_x] = 0
    var_y[mask_y] = 0
    cov_xy[mask_x | mask_y] = 0

    return MomentMaps(mu_x, mu_y, var_x, var_y, cov_xy)
