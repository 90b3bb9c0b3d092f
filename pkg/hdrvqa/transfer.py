"""
Luminance transforms

PQ EOTF, PU21 encoding and the HDRMAX local-normalization chains. All
functions are pure and accept scalars or numpy arrays.
"""
import csv
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import List, Optional, Tuple, Union

import numpy as np
import structlog
from boltons.fileutils import atomic_save
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import ndimage

from .errors import DomainError
from .models import CurveName, HdrmaxChannel

log = structlog.get_logger()

ArrayLike = Union[float, np.ndarray]

PQ_PEAK_NITS = 10000.0
PU21_MIN_NITS = 0.005
PU21_MAX_NITS = 10000.0


# ============================================================================
# PQ (SMPTE ST 2084)
# ============================================================================

@dataclass(frozen=True)
class PqConstants:
    m1: float = 2610 / 16384
    m2: float = 2523 * 128 / 4096
    c1: float = 3424 / 4096
    c2: float = 2413 * 32 / 4096
    c3: float = 2392 * 32 / 4096
    peak: float = PQ_PEAK_NITS


PQ = PqConstants()


def pq_eotf(code: ArrayLike, constants: PqConstants = PQ) -> ArrayLike:
    """
    Map PQ code values in [0, 1] to display luminance in cd/m².

    Raises:
        DomainError: any code outside [0, 1] (NaN included)
    """
    x = np.asarray(code, dtype=np.float64)
    if not np.all((x >= 0.0) & (x <= 1.0)):
        raise DomainError("PQ code values must lie in [0, 1]", min=float(np.nanmin(x)) if x.size else None)
    e = np.power(x, 1.0 / constants.m2)
    num = np.maximum(e - constants.c1, 0.0)
    den = constants.c2 - constants.c3 * e
    out = constants.peak * np.power(num / den, 1.0 / constants.m1)
    return float(out) if np.ndim(code) == 0 else out


# ============================================================================
# PU21
# ============================================================================

def _pu21_curve(y: np.ndarray, p: Tuple[float, ...]) -> np.ndarray:
    yp = np.power(y, p[3])
    return p[6] * (np.power((p[0] + p[1] * yp) / (1.0 + p[2] * yp), p[4]) - p[5])


@lru_cache()
def pu21_coefficients() -> Tuple[float, ...]:
    """Banding+glare coefficients from the bundled table, validated on first load"""
    raw = resources.files("hdrvqa").joinpath("data", "pu21.json").read_text(encoding="utf-8")
    p = tuple(float(v) for v in json.loads(raw)["coefficients"])
    if len(p) != 7:
        raise DomainError("PU21 table must hold seven coefficients", found=len(p))

    grid = np.logspace(np.log10(PU21_MIN_NITS), np.log10(PU21_MAX_NITS), 4096)
    values = _pu21_curve(grid, p)
    if not np.all(np.diff(values) > 0) or abs(values[0]) >= 1e-3:
        raise DomainError("PU21 coefficient table failed validation")
    log.debug("pu21_coefficients_loaded", peak=float(values[-1]))
    return p


def pu21_encode(luminance: ArrayLike) -> ArrayLike:
    """
    Perceptually uniform encoding of luminance in cd/m².

    Luminance is clamped to [0.005, 10000]; negative input raises DomainError.
    """
    y = np.asarray(luminance, dtype=np.float64)
    if np.any(np.isnan(y)) or np.any(y < 0):
        raise DomainError("PU21 luminance must be non-negative")
    out = _pu21_curve(np.clip(y, PU21_MIN_NITS, PU21_MAX_NITS), pu21_coefficients())
    return float(out) if np.ndim(luminance) == 0 else out


@lru_cache()
def pu21_peak() -> float:
    """PU21 value at 10000 cd/m²"""
    return float(pu21_encode(PU21_MAX_NITS))


# ============================================================================
# LOCAL NORMALIZATION
# ============================================================================

class LocalNormConfig(BaseModel):
    """Window extents of the HDRMAX local normalizations"""
    model_config = ConfigDict(frozen=True)

    minmax_window: int = 17
    meansub_window: int = 31
    gaussian_sigma: Optional[float] = Field(default=None, gt=0)

    @field_validator("minmax_window", "meansub_window")
    @classmethod
    def validate_window(cls, v: int) -> int:
        if v < 3 or v % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {v}")
        return v

    @property
    def sigma(self) -> float:
        return self.gaussian_sigma if self.gaussian_sigma is not None else self.meansub_window / 6.0

    @classmethod
    def from_settings(cls, settings) -> "LocalNormConfig":
        return cls(
            minmax_window=settings.minmax_window,
            meansub_window=settings.meansub_window,
            gaussian_sigma=settings.gaussian_sigma,
        )


def local_minmax_normalize(plane: np.ndarray, cfg: LocalNormConfig = LocalNormConfig()) -> np.ndarray:
    """
    Map each pixel to [-1, 1] relative to its window minimum and maximum.
    Flat windows map to 0. Borders replicate edge pixels.
    """
    x = np.asarray(plane, dtype=np.float64)
    lo = ndimage.minimum_filter(x, size=cfg.minmax_window, mode="nearest")
    hi = ndimage.maximum_filter(x, size=cfg.minmax_window, mode="nearest")
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, 2.0 * (x - lo) / safe - 1.0, 0.0)
    return np.clip(out, -1.0, 1.0)


def gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    """Unit-sum 1-D Gaussian truncated to `window` taps"""
    r = window // 2
    t = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()


def local_mean(plane: np.ndarray, cfg: LocalNormConfig = LocalNormConfig()) -> np.ndarray:
    g = gaussian_kernel(cfg.meansub_window, cfg.sigma)
    x = np.asarray(plane, dtype=np.float64)
    m = ndimage.correlate1d(x, g, axis=0, mode="nearest")
    return ndimage.correlate1d(m, g, axis=1, mode="nearest")


def local_meansub_normalize(plane: np.ndarray, cfg: LocalNormConfig = LocalNormConfig()) -> np.ndarray:
    """Subtract the Gaussian-weighted local mean"""
    x = np.asarray(plane, dtype=np.float64)
    return x - local_mean(x, cfg)


# ============================================================================
# HDRMAX NONLINEARITIES
# ============================================================================

def hdrmax1(x: ArrayLike, literal: bool = False) -> ArrayLike:
    """
    Odd double exponential sign(x)·(exp(4|x|) - 1).

    With literal=True computes sign(x)·exp(4|x|) - 1 instead, which is
    discontinuous at 0.
    """
    v = np.asarray(x, dtype=np.float64)
    if literal:
        out = np.sign(v) * np.exp(4.0 * np.abs(v)) - 1.0
    else:
        out = np.sign(v) * np.expm1(4.0 * np.abs(v))
    return float(out) if np.ndim(x) == 0 else out


def hdrmax2_pos(x: ArrayLike) -> ArrayLike:
    out = np.exp(0.5 * np.asarray(x, dtype=np.float64))
    return float(out) if np.ndim(x) == 0 else out


def hdrmax2_neg(x: ArrayLike) -> ArrayLike:
    out = np.exp(-5.0 * np.asarray(x, dtype=np.float64))
    return float(out) if np.ndim(x) == 0 else out


def hdrmax_transform(
    frame_luma: np.ndarray,
    variant: HdrmaxChannel,
    cfg: LocalNormConfig = LocalNormConfig(),
    literal: bool = False,
) -> np.ndarray:
    """Local normalization followed by the channel's nonlinearity"""
    variant = HdrmaxChannel(variant)
    if variant == HdrmaxChannel.H1:
        return hdrmax1(local_minmax_normalize(frame_luma, cfg), literal=literal)
    normalized = local_meansub_normalize(frame_luma, cfg)
    if variant == HdrmaxChannel.H2_POS:
        return hdrmax2_pos(normalized)
    return hdrmax2_neg(normalized)


# ============================================================================
# CURVE SAMPLING
# ============================================================================

@dataclass(frozen=True)
class NonlinearityCurve:
    name: CurveName
    domain: Tuple[float, float]
    samples: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        xs = [x for x, _ in self.samples]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("curve samples must be strictly increasing in x", curve=self.name.value)


def sample_curve(name: Union[CurveName, str], n: int = 1001) -> NonlinearityCurve:
    """
    Sample a curve over its natural domain: [-1, 1] for HDRMAX, [0, 1] for
    PQ and log-spaced [0.005, 10000] cd/m² for PU21.
    """
    name = CurveName(name)
    if name == CurveName.PU21:
        domain = (PU21_MIN_NITS, PU21_MAX_NITS)
        xs = np.logspace(np.log10(domain[0]), np.log10(domain[1]), n)
        ys = pu21_encode(xs)
    elif name == CurveName.PQ_EOTF:
        domain = (0.0, 1.0)
        xs = np.linspace(0.0, 1.0, n)
        ys = pq_eotf(xs)
    else:
        domain = (-1.0, 1.0)
        xs = np.linspace(-1.0, 1.0, n)
        fn = {
            CurveName.HDRMAX1: hdrmax1,
            CurveName.HDRMAX2_POS: hdrmax2_pos,
            CurveName.HDRMAX2_NEG: hdrmax2_neg,
        }[name]
        ys = fn(xs)
    return NonlinearityCurve(name=name, domain=domain, samples=tuple(zip(xs.tolist(), ys.tolist())))


NONLINEARITY_HEADER = ["x", "hdrmax1", "hdrmax2_pos", "hdrmax2_neg"]


def nonlinearity_table(n: int = 1001) -> List[List[float]]:
    """Rows of x and the three HDRMAX curves on a uniform grid over [-1, 1]"""
    xs = np.linspace(-1.0, 1.0, n)
    return np.column_stack([xs, hdrmax1(xs), hdrmax2_pos(xs), hdrmax2_neg(xs)]).tolist()


def nonlinearity_csv(n: int = 1001) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NONLINEARITY_HEADER)
    for row in nonlinearity_table(n):
        writer.writerow([repr(v) for v in row])
    return buf.getvalue()


def write_nonlinearity_csv(path, n: int = 1001) -> int:
    with atomic_save(str(path), text_mode=True) as f:
        f.write(nonlinearity_csv(n))
    return n
