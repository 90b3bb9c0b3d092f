"""
Unified transform

SAST rescaling, orthonormal Haar decomposition and CSF subband weighting,
computed once per plane per frame and shared by every feature atom.
"""
import math
import threading
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from pyrsistent import PMap, pmap
from scipy import ndimage

from .errors import GeometryError, StateError, TooSmallError
from .frameio import PlanarFrame
from .metrics import track_transform
from .models import ChromaSubsampling, HdrmaxChannel, Plane
from .transfer import LocalNormConfig, hdrmax_transform

log = structlog.get_logger()

GOLDEN_RATIO_APPROX = 1.618
ORIENTATIONS = ("H", "V", "D")


# ============================================================================
# VIEWING GEOMETRY & SAST
# ============================================================================

class ViewingGeometry(BaseModel):
    """Viewing distance relative to display height, and display height in pixels"""
    model_config = ConfigDict(frozen=True)

    distance_to_height: float = Field(default=1.5, gt=0)
    display_height_px: int = Field(default=2160, gt=0)

    @classmethod
    def parse(cls, value: str) -> "ViewingGeometry":
        """Parse `D_H:HEIGHT`, e.g. `1.5:2160`"""
        ratio, sep, height = value.partition(":")
        try:
            if not sep:
                return cls(distance_to_height=float(ratio))
            return cls(distance_to_height=float(ratio), display_height_px=int(height))
        except ValueError as e:
            raise GeometryError(f"Invalid viewing geometry '{value}': expected D_H:HEIGHT", value=value) from e

    @classmethod
    def from_settings(cls, settings) -> "ViewingGeometry":
        return cls(distance_to_height=settings.distance_to_height, display_height_px=settings.display_height_px)

    @property
    def pixels_per_degree(self) -> float:
        degrees = 2.0 * math.degrees(math.atan(1.0 / (2.0 * self.distance_to_height)))
        return self.display_height_px / degrees


def sast_factor(geom: ViewingGeometry) -> float:
    return geom.distance_to_height / GOLDEN_RATIO_APPROX


def snap_factor(factor: float, tolerance: float = 0.15) -> float:
    """Nearest power of two when within `tolerance` (relative), else the factor itself"""
    if factor <= 0:
        raise GeometryError(f"SAST factor must be positive, got {factor}", factor=factor)
    p = 2.0 ** round(math.log2(factor))
    return p if abs(factor - p) / p <= tolerance else factor


def sast_rescale(
    plane: np.ndarray,
    factor: float,
    levels: Optional[int] = None,
    tolerance: float = 0.15,
    order: int = 1,
) -> np.ndarray:
    """
    Rescale a plane by 1/factor after snapping. A snapped factor of 1 returns
    the input unchanged.

    Raises:
        TooSmallError: the result is smaller than 2^levels in either axis
    """
    applied = snap_factor(factor, tolerance)
    h, w = plane.shape
    if applied == 1.0:
        out = plane
    else:
        oh, ow = max(int(round(h / applied)), 1), max(int(round(w / applied)), 1)
        out = ndimage.zoom(
            np.asarray(plane, dtype=np.float64),
            (oh / h, ow / w),
            order=order,
            mode="nearest",
            grid_mode=True,
        )
        log.debug("sast_resampled", factor=factor, applied=applied, shape=[oh, ow])
    if levels is not None and min(out.shape) < 2 ** levels:
        raise TooSmallError(
            f"Plane of {out.shape[1]}x{out.shape[0]} is too small for {levels} wavelet levels",
            shape=list(out.shape), levels=levels,
        )
    return out


# ============================================================================
# HAAR PYRAMID
# ============================================================================

class Subbands(NamedTuple):
    A: np.ndarray
    H: np.ndarray
    V: np.ndarray
    D: np.ndarray


def _haar_step(x: np.ndarray) -> Subbands:
    pad_rows, pad_cols = x.shape[0] % 2, x.shape[1] % 2
    if pad_rows or pad_cols:
        x = np.pad(x, ((0, pad_rows), (0, pad_cols)), mode="edge")
    a, b = x[0::2, 0::2], x[0::2, 1::2]
    c, d = x[1::2, 0::2], x[1::2, 1::2]
    top, bottom = a + b, c + d
    left_diff, right_diff = a - b, c - d
    return Subbands(
        (top + bottom) / 2.0,
        (top - bottom) / 2.0,
        (left_diff + right_diff) / 2.0,
        (left_diff - right_diff) / 2.0,
    )


def _haar_inverse_step(bands: Subbands, shape: Tuple[int, int]) -> np.ndarray:
    A, H, V, D = bands
    s, t = A + H, A - H
    u, v = V + D, V - D
    rows, cols = A.shape
    x = np.empty((2 * rows, 2 * cols), dtype=np.float64)
    x[0::2, 0::2] = (s + u) / 2.0
    x[0::2, 1::2] = (s - u) / 2.0
    x[1::2, 0::2] = (t + v) / 2.0
    x[1::2, 1::2] = (t - v) / 2.0
    return x[: shape[0], : shape[1]]


@dataclass(frozen=True)
class WaveletPyramid:
    """
    Subband quadruples per level (level 1 first). Every level keeps its
    approximation band; reconstruction starts from the coarsest.
    """
    levels: Tuple[Subbands, ...]
    shapes: Tuple[Tuple[int, int], ...]
    csf_applied: bool = False

    def __post_init__(self):
        for bands in self.levels:
            for band in bands:
                band.setflags(write=False)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, l: int) -> Subbands:
        """Subbands at 1-based level l"""
        if not 1 <= l <= self.n_levels:
            raise GeometryError(f"Level {l} outside 1..{self.n_levels}", level=l)
        return self.levels[l - 1]

    def energy(self) -> float:
        total = float(np.sum(self.levels[-1].A ** 2))
        for bands in self.levels:
            total += sum(float(np.sum(getattr(bands, o) ** 2)) for o in ORIENTATIONS)
        return total

    def inverse(self) -> np.ndarray:
        x = self.levels[-1].A
        for bands, shape in zip(reversed(self.levels), reversed(self.shapes)):
            x = _haar_inverse_step(bands._replace(A=x), shape)
        return x


def haar_dwt(plane: np.ndarray, levels: int) -> WaveletPyramid:
    """
    Orthonormal 2-D Haar analysis, recursing on the approximation band.
    Odd dimensions are edge-padded before each step.
    """
    x = np.asarray(plane, dtype=np.float64)
    if levels < 1:
        raise GeometryError(f"levels must be >= 1, got {levels}", levels=levels)
    if min(x.shape) < 2 ** levels:
        raise TooSmallError(
            f"Plane of {x.shape[1]}x{x.shape[0]} is too small for {levels} wavelet levels",
            shape=list(x.shape), levels=levels,
        )
    bands: List[Subbands] = []
    shapes: List[Tuple[int, int]] = []
    for _ in range(levels):
        shapes.append(x.shape)
        step = _haar_step(x)
        bands.append(step)
        x = step.A
    return WaveletPyramid(levels=tuple(bands), shapes=tuple(shapes))


def haar_idwt(pyr: WaveletPyramid) -> np.ndarray:
    """Exact inverse of `haar_dwt`; refuses CSF-weighted pyramids"""
    if pyr.csf_applied:
        raise StateError("Cannot invert a CSF-weighted pyramid")
    return pyr.inverse()


# ============================================================================
# CSF WEIGHTING
# ============================================================================

def mannos_sakrison(f: float) -> float:
    """Contrast sensitivity at f cycles per degree"""
    return 2.6 * (0.0192 + 0.114 * f) * math.exp(-((0.114 * f) ** 1.1))


@dataclass(frozen=True)
class CsfWeights:
    """Scalar multiplier per (level, orientation); orientation A is the approximation band"""
    levels: int
    weights: PMap = field(default_factory=pmap)

    def weight(self, level: int, orientation: str) -> float:
        return self.weights[(level, orientation)]

    def rows(self) -> List[Tuple[int, str, float]]:
        return [(l, o, self.weights[(l, o)]) for l in range(1, self.levels + 1) for o in ("A",) + ORIENTATIONS]


def csf_weights(
    geom: ViewingGeometry,
    levels: int,
    ppd_scale: float = 1.0,
    flat: bool = False,
) -> CsfWeights:
    """
    Mannos-Sakrison weights at each level's centre frequency ppd/2^(l+1).
    `ppd_scale` shrinks the sampling density for subsampled or rescaled planes.
    """
    if levels < 1:
        raise GeometryError(f"levels must be >= 1, got {levels}", levels=levels)
    ppd = geom.pixels_per_degree * ppd_scale
    table: Dict[Tuple[int, str], float] = {}
    for l in range(1, levels + 1):
        w = 1.0 if flat else mannos_sakrison(ppd / 2 ** (l + 1))
        table[(l, "A")] = 1.0
        for o in ORIENTATIONS:
            table[(l, o)] = w
    return CsfWeights(levels=levels, weights=pmap(table))


def apply_csf(pyr: WaveletPyramid, w: CsfWeights) -> WaveletPyramid:
    """
    Multiply each subband by its weight.

    Raises:
        StateError: the pyramid is already weighted
    """
    if pyr.csf_applied:
        raise StateError("CSF weights were already applied to this pyramid")
    if w.levels < pyr.n_levels:
        raise GeometryError(f"CSF table covers {w.levels} levels, pyramid has {pyr.n_levels}")
    weighted = []
    for l, bands in enumerate(pyr.levels, start=1):
        weighted.append(Subbands(*(band * w.weight(l, o) for band, o in zip(bands, ("A",) + ORIENTATIONS))))
    return WaveletPyramid(levels=tuple(weighted), shapes=pyr.shapes, csf_applied=True)


CSF_TABLE_HEADER = ["level", "orientation", "weight"]


def csf_table_rows(geom: ViewingGeometry, levels: int, flat: bool = False) -> List[Tuple[int, str, float]]:
    return csf_weights(geom, levels, flat=flat).rows()


# ============================================================================
# PER-FRAME TRANSFORMS
# ============================================================================

def transform_plane(
    plane: np.ndarray,
    geom: ViewingGeometry,
    levels: int,
    ppd_scale: float = 1.0,
    flat_csf: bool = False,
    tolerance: float = 0.15,
    order: int = 1,
    role: str = "ref",
    plane_name: str = "Y",
    kind: str = "base",
) -> WaveletPyramid:
    """SAST rescale, Haar decomposition and CSF weighting of one plane"""
    factor = sast_factor(geom)
    rescaled = sast_rescale(plane, factor, levels=levels, tolerance=tolerance, order=order)
    applied = snap_factor(factor, tolerance)
    pyr = haar_dwt(rescaled, levels)
    weights = csf_weights(geom, levels, ppd_scale=ppd_scale / applied, flat=flat_csf)
    track_transform(role, plane_name, kind)
    return apply_csf(pyr, weights)


class FrameTransforms:
    """
    Memoized unified transforms of one frame. Each (plane, kind) pyramid is
    built at most once; instances are safe to share across threads.
    """

    def __init__(
        self,
        frame: PlanarFrame,
        geom: ViewingGeometry,
        role: str = "ref",
        settings=None,
        levels: Optional[int] = None,
    ):
        from .config import get_settings

        self.frame = frame
        self.geom = geom
        self.role = role
        self.settings = settings or get_settings()
        self.levels = levels or self.settings.levels
        self.norm = LocalNormConfig.from_settings(self.settings)
        self._cache: Dict[Tuple[str, str], WaveletPyramid] = {}
        self._lock = threading.RLock()

    def _ppd_scale(self, plane: Plane) -> float:
        if plane != Plane.Y and self.frame.chroma_subsampling == ChromaSubsampling.YUV420:
            return 0.5
        return 1.0

    def _build(self, plane: Plane, kind: str, data: np.ndarray) -> WaveletPyramid:
        return transform_plane(
            data,
            self.geom,
            self.levels,
            ppd_scale=self._ppd_scale(plane),
            flat_csf=self.settings.csf == "flat",
            tolerance=self.settings.sast_snap_tolerance,
            order=self.settings.resample_order,
            role=self.role,
            plane_name=plane.value,
            kind=kind,
        )

    def _memo(self, plane: Plane, kind: str, make) -> WaveletPyramid:
        key = (plane.value, kind)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = self._build(plane, kind, make())
            return self._cache[key]

    def base(self, plane: Union[Plane, str] = Plane.Y) -> WaveletPyramid:
        plane = Plane(plane)
        return self._memo(plane, "base", lambda: self.frame.plane(plane.value))

    def hdrmax(self, channel: Union[HdrmaxChannel, str]) -> WaveletPyramid:
        """Pyramid of the HDRMAX-transformed luma plane"""
        channel = HdrmaxChannel(channel)
        return self._memo(
            Plane.Y,
            channel.value,
            lambda: hdrmax_transform(self.frame.y, channel, self.norm, literal=self.settings.hdrmax1_literal),
        )

    def temporal(self, prev: "FrameTransforms", plane: Union[Plane, str] = Plane.Y) -> WaveletPyramid:
        """Pyramid of the difference plane (this frame minus `prev`)"""
        plane = Plane(plane)
        return self._memo(
            plane,
            "temporal",
            lambda: self.frame.plane(plane.value) - prev.frame.plane(plane.value),
        )

    @property
    def built(self) -> List[Tuple[str, str]]:
        with self._lock:
            return sorted(self._cache)


def unified_transform(
    frame: PlanarFrame,
    geom: ViewingGeometry,
    levels: int,
    settings=None,
    role: str = "ref",
) -> Dict[Plane, WaveletPyramid]:
    """CSF-weighted pyramids of all three planes"""
    transforms = FrameTransforms(frame, geom, role=role, settings=settings, levels=levels)
    return {plane: transforms.base(plane) for plane in Plane}
