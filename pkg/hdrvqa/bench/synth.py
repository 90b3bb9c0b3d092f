"""
Synthetic desk-scale dataset

Procedural HDR-like references (band-limited texture, a smooth gradient and
specular blobs, drifting slowly over time) distorted at increasing levels by
Gaussian blur and uniform quantization, with a proxy MOS decaying in the
distortion level. Each content is its own group.
"""
from pathlib import Path
from typing import List, Tuple

import numpy as np
import structlog
from scipy import ndimage

from ..frameio import PlanarFrame, chroma_shape, quantize_samples, write_raw_yuv
from ..models import ChromaSubsampling, ManifestEntry
from .manifest import write_manifest

log = structlog.get_logger()

CODE_LOW, CODE_HIGH = 0.05, 0.92
BLUR_PER_LEVEL = 0.6
MOS_DECAY = 0.35
MOS_NOISE = 0.5


def _texture(rng: np.random.Generator, shape: Tuple[int, int], sigma: float) -> np.ndarray:
    t = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    return (t - t.mean()) / (t.std() + 1e-12)


def reference_canvas(rng: np.random.Generator, shape: Tuple[int, int], margin: int) -> np.ndarray:
    """Luma canvas in PQ code units, `margin` pixels larger than `shape` on each axis"""
    rows, cols = shape[0] + margin, shape[1] + margin
    yy, xx = np.mgrid[0:rows, 0:cols] / np.array([rows, cols])[:, None, None]
    angle = rng.uniform(0, 2 * np.pi)
    gradient = np.cos(angle) * xx + np.sin(angle) * yy

    texture = 0.6 * _texture(rng, (rows, cols), 1.5) + 0.4 * _texture(rng, (rows, cols), 4.0)

    blobs = np.zeros((rows, cols))
    for _ in range(rng.integers(2, 5)):
        cy, cx = rng.uniform(0, rows), rng.uniform(0, cols)
        radius = rng.uniform(2.0, 0.08 * min(rows, cols) + 2.0)
        blobs += np.exp(-((yy * rows - cy) ** 2 + (xx * cols - cx) ** 2) / (2 * radius ** 2))

    canvas = 0.35 * gradient + 0.12 * texture + 0.5 * blobs
    canvas = (canvas - canvas.min()) / (canvas.max() - canvas.min())
    return CODE_LOW + (CODE_HIGH - CODE_LOW) * canvas


def reference_frames(
    rng: np.random.Generator,
    width: int,
    height: int,
    frames: int,
    subsampling: ChromaSubsampling = ChromaSubsampling.YUV420,
) -> List[PlanarFrame]:
    """A slowly panning crop of a procedural canvas, one pixel per frame"""
    margin = frames + 1
    luma = reference_canvas(rng, (height, width), margin)
    ch, cw = chroma_shape(width, height, subsampling)
    cb_canvas = 0.5 + 0.08 * _texture(rng, luma.shape, 6.0)
    cr_canvas = 0.5 + 0.08 * _texture(rng, luma.shape, 6.0)
    step = 2 if subsampling == ChromaSubsampling.YUV420 else 1

    out = []
    for t in range(frames):
        y = luma[t:t + height, t:t + width]
        cb = cb_canvas[t:t + step * ch:step, t:t + step * cw:step]
        cr = cr_canvas[t:t + step * ch:step, t:t + step * cw:step]
        out.append(PlanarFrame(
            y=np.clip(y, 0, 1).copy(),
            cb=np.clip(cb, 0, 1).copy(),
            cr=np.clip(cr, 0, 1).copy(),
            width=width,
            height=height,
            chroma_subsampling=subsampling,
            bit_depth_source=10,
            frame_index=t,
        ))
    return out


def distort_plane(plane: np.ndarray, level: int, bit_depth: int) -> np.ndarray:
    """Blur with sigma 0.6*level, then quantize to a step of 2^level codes; level 0 is a no-op"""
    if level == 0:
        return plane
    blurred = ndimage.gaussian_filter(plane, BLUR_PER_LEVEL * level, mode="nearest")
    step = (2 ** level) / ((1 << bit_depth) - 1)
    return np.clip(np.round(blurred / step) * step, 0.0, 1.0)


def distort_frames(frames: List[PlanarFrame], level: int, bit_depth: int = 10) -> List[PlanarFrame]:
    if level == 0:
        return frames
    return [
        PlanarFrame(
            y=distort_plane(f.y, level, bit_depth),
            cb=distort_plane(f.cb, level, bit_depth),
            cr=distort_plane(f.cr, level, bit_depth),
            width=f.width,
            height=f.height,
            chroma_subsampling=f.chroma_subsampling,
            bit_depth_source=f.bit_depth_source,
            frame_index=f.frame_index,
        )
        for f in frames
    ]


def proxy_mos(level: int, rng: np.random.Generator) -> float:
    return float(100.0 * np.exp(-MOS_DECAY * level) + rng.normal(0.0, MOS_NOISE))


def synth_dataset(
    out_dir,
    n_contents: int = 10,
    n_levels: int = 5,
    frames: int = 8,
    dims: Tuple[int, int] = (96, 96),
    seed: int = 0,
    bit_depth: int = 10,
) -> Path:
    """
    Write references, distorted versions and a manifest under `out_dir`.

    Args:
        dims: (width, height), each at least 64

    Returns:
        Path of the manifest CSV
    """
    width, height = dims
    if width < 64 or height < 64:
        raise ValueError(f"Synthetic videos must be at least 64x64, got {width}x{height}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{width}x{height}_{bit_depth}bit_420"

    entries: List[ManifestEntry] = []
    for c, child in enumerate(np.random.SeedSequence(seed).spawn(n_contents)):
        rng = np.random.Generator(np.random.PCG64(child))
        content = f"content{c:02d}"
        ref = reference_frames(rng, width, height, frames)
        # on-disk precision
        ref = [_requantize(f, bit_depth) for f in ref]
        ref_name = f"{content}_ref_{tag}.yuv"
        write_raw_yuv(out_dir / ref_name, ref, bit_depth)

        for level in range(n_levels):
            test_name = f"{content}_d{level}_{tag}.yuv"
            write_raw_yuv(out_dir / test_name, distort_frames(ref, level, bit_depth), bit_depth)
            entries.append(ManifestEntry(
                video_id=f"{content}_d{level}",
                content_id=content,
                content_group=content,
                ref_path=ref_name,
                test_path=test_name,
                mos_dark=proxy_mos(level, rng),
                mos_bright=proxy_mos(level, rng),
            ))

    manifest_path = out_dir / "manifest.csv"
    write_manifest(manifest_path, entries)
    log.info("synthetic_dataset_written", path=str(manifest_path), videos=len(entries), contents=n_contents)
    return manifest_path


def _requantize(frame: PlanarFrame, bit_depth: int) -> PlanarFrame:
    scale = (1 << bit_depth) - 1

    def q(plane, chroma=False):
        return quantize_samples(plane, bit_depth, chroma=chroma).astype(np.float64) / scale

    return PlanarFrame(
        y=q(frame.y),
        cb=q(frame.cb, True),
        cr=q(frame.cr, True),
        width=frame.width,
        height=frame.height,
        chroma_subsampling=frame.chroma_subsampling,
        bit_depth_source=bit_depth,
        frame_index=frame.frame_index,
    )
