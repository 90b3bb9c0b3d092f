from pathlib import Path

import numpy as np
import pytest
from scipy import ndimage

from hdrvqa.config import Settings
from hdrvqa.frameio import PlanarFrame, chroma_shape, write_raw_yuv
from hdrvqa.models import ChromaSubsampling
from hdrvqa.unified import FrameTransforms, ViewingGeometry


def textured_plane(rng: np.random.Generator, shape=(128, 128), sigma: float = 2.0, low=0.2, high=0.8) -> np.ndarray:
    """Band-limited noise rescaled to [low, high]"""
    t = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    t = (t - t.min()) / (t.max() - t.min())
    return low + (high - low) * t


def make_frame(y: np.ndarray, cb=None, cr=None, index: int = 0, subsampling=ChromaSubsampling.YUV420) -> PlanarFrame:
    height, width = y.shape
    ch, cw = chroma_shape(width, height, subsampling)
    step = 2 if subsampling == ChromaSubsampling.YUV420 else 1
    if cb is None:
        cb = np.clip(0.5 + 0.1 * (y[::step, ::step][:ch, :cw] - 0.5), 0, 1)
    if cr is None:
        cr = np.clip(0.5 - 0.1 * (y[::step, ::step][:ch, :cw] - 0.5), 0, 1)
    return PlanarFrame(
        y=np.array(y, dtype=np.float64),
        cb=np.array(cb, dtype=np.float64),
        cr=np.array(cr, dtype=np.float64),
        width=width,
        height=height,
        chroma_subsampling=subsampling,
        bit_depth_source=10,
        frame_index=index,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def settings():
    return Settings()


@pytest.fixture
def geom():
    return ViewingGeometry()


@pytest.fixture
def plane(rng):
    return textured_plane(rng)


@pytest.fixture
def frame(plane):
    return make_frame(plane)


@pytest.fixture
def transforms(geom, settings):
    """Build FrameTransforms for a frame in a given role"""

    def build(frame: PlanarFrame, role: str = "ref") -> FrameTransforms:
        return FrameTransforms(frame, geom, role=role, settings=settings)

    return build


@pytest.fixture
def static_video(tmp_path, rng) -> Path:
    """Three identical 64x64 10-bit 4:2:0 frames as raw YUV"""
    y = textured_plane(rng, (64, 64))
    frames = [make_frame(y, index=i) for i in range(3)]
    path = tmp_path / "static_64x64_10bit_420.yuv"
    write_raw_yuv(path, frames, 10)
    return path


@pytest.fixture
def moving_pair(tmp_path, rng):
    """Reference pan and a blurred test version, 64x64, four frames"""
    canvas = textured_plane(rng, (72, 72))
    ref = [make_frame(canvas[i:i + 64, i:i + 64].copy(), index=i) for i in range(4)]
    test = [
        make_frame(ndimage.gaussian_filter(f.y, 1.0, mode="nearest"), f.cb, f.cr, index=f.frame_index)
        for f in ref
    ]
    ref_path = tmp_path / "pan_ref_64x64_10bit_420.yuv"
    test_path = tmp_path / "pan_blur_64x64_10bit_420.yuv"
    write_raw_yuv(ref_path, ref, 10)
    write_raw_yuv(test_path, test, 10)
    return ref_path, test_path
