"""
Frame ingestion

Decodes Y4M and raw planar YUV files into PlanarFrame values normalized to
[0, 1] and pairs reference/test sources in lockstep.
"""
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np
import structlog
from boltons.fileutils import atomic_save

from .errors import (
    DimensionMismatchError,
    DomainError,
    FrameParseError,
    GeometryError,
    LengthMismatchError,
    TruncationError,
    UnsupportedFormatError,
)
from .models import ChromaSubsampling

log = structlog.get_logger()

Y4M_SIGNATURE = b"YUV4MPEG2"
FRAME_MARKER = b"FRAME"

# colour space tag -> (subsampling, bit depth)
Y4M_COLORSPACES = {
    "420": (ChromaSubsampling.YUV420, 8),
    "420jpeg": (ChromaSubsampling.YUV420, 8),
    "420paldv": (ChromaSubsampling.YUV420, 8),
    "420mpeg2": (ChromaSubsampling.YUV420, 8),
    "420p10": (ChromaSubsampling.YUV420, 10),
    "420p12": (ChromaSubsampling.YUV420, 12),
    "444": (ChromaSubsampling.YUV444, 8),
    "444p10": (ChromaSubsampling.YUV444, 10),
    "444p12": (ChromaSubsampling.YUV444, 12),
}

PathLike = Union[str, os.PathLike]


# ============================================================================
# FRAMES
# ============================================================================

def chroma_shape(width: int, height: int, subsampling: ChromaSubsampling) -> Tuple[int, int]:
    """(rows, cols) of a chroma plane"""
    if subsampling == ChromaSubsampling.YUV420:
        return (height + 1) // 2, (width + 1) // 2
    return height, width


def frame_bytes(width: int, height: int, bit_depth: int, subsampling: ChromaSubsampling) -> int:
    """Payload size of one planar frame"""
    ch, cw = chroma_shape(width, height, subsampling)
    sample_bytes = 1 if bit_depth == 8 else 2
    return (width * height + 2 * ch * cw) * sample_bytes


@dataclass(frozen=True)
class PlanarFrame:
    """One decoded frame, samples normalized to [0, 1]. Arrays are read-only."""
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray
    width: int
    height: int
    chroma_subsampling: ChromaSubsampling
    bit_depth_source: int
    frame_index: int

    def __post_init__(self):
        if self.y.shape != (self.height, self.width):
            raise GeometryError(
                f"Luma plane is {self.y.shape}, expected {(self.height, self.width)}",
                expected=[self.height, self.width], actual=list(self.y.shape),
            )
        expected = chroma_shape(self.width, self.height, self.chroma_subsampling)
        for name, plane in (("cb", self.cb), ("cr", self.cr)):
            if plane.shape != expected:
                raise GeometryError(
                    f"Chroma plane {name} is {plane.shape}, expected {expected}",
                    expected=list(expected), actual=list(plane.shape),
                )
        for plane in (self.y, self.cb, self.cr):
            plane.setflags(write=False)

    @property
    def dims(self) -> Tuple[int, int]:
        return self.width, self.height

    def plane(self, name: str) -> np.ndarray:
        return {"Y": self.y, "Cb": self.cb, "Cr": self.cr}[name]


def _range_params(bit_depth: int, full_range: bool, chroma: bool) -> Tuple[float, float]:
    """(offset, scale) taking integer codes to [0, 1]"""
    if full_range:
        return 0.0, float((1 << bit_depth) - 1)
    step = 1 << (bit_depth - 8)
    return 16.0 * step, (224.0 if chroma else 219.0) * step


def normalize_samples(codes: np.ndarray, bit_depth: int, full_range: bool = True, chroma: bool = False) -> np.ndarray:
    offset, scale = _range_params(bit_depth, full_range, chroma)
    out = (codes.astype(np.float64) - offset) / scale
    if not full_range:
        np.clip(out, 0.0, 1.0, out=out)
    return out


def quantize_samples(values: np.ndarray, bit_depth: int, full_range: bool = True, chroma: bool = False) -> np.ndarray:
    """Inverse of normalize_samples, rounding to the nearest code"""
    offset, scale = _range_params(bit_depth, full_range, chroma)
    codes = np.rint(np.asarray(values, dtype=np.float64) * scale + offset)
    return np.clip(codes, 0, (1 << bit_depth) - 1).astype(np.uint16)


def _decode_payload(
    payload: bytes,
    width: int,
    height: int,
    bit_depth: int,
    subsampling: ChromaSubsampling,
    frame_index: int,
    full_range: bool,
) -> PlanarFrame:
    dtype = np.uint8 if bit_depth == 8 else np.dtype("<u2")
    samples = np.frombuffer(payload, dtype=dtype)
    ch, cw = chroma_shape(width, height, subsampling)
    n_y, n_c = width * height, ch * cw
    y = samples[:n_y].reshape(height, width)
    cb = samples[n_y:n_y + n_c].reshape(ch, cw)
    cr = samples[n_y + n_c:n_y + 2 * n_c].reshape(ch, cw)
    max_code = (1 << bit_depth) - 1
    for name, plane in (("Y", y), ("Cb", cb), ("Cr", cr)):
        peak = int(plane.max())
        if peak > max_code:
            raise DomainError(
                f"Frame {frame_index} plane {name}: code {peak} exceeds the {bit_depth}-bit maximum {max_code}",
                frame_index=frame_index, plane=name, code=peak,
            )
    return PlanarFrame(
        y=normalize_samples(y, bit_depth, full_range),
        cb=normalize_samples(cb, bit_depth, full_range, chroma=True),
        cr=normalize_samples(cr, bit_depth, full_range, chroma=True),
        width=width,
        height=height,
        chroma_subsampling=subsampling,
        bit_depth_source=bit_depth,
        frame_index=frame_index,
    )


# ============================================================================
# FRAME SOURCES
# ============================================================================

class FrameSource:
    """Sequential, re-iterable reader of PlanarFrame values"""

    def __init__(
        self,
        path: PathLike,
        width: int,
        height: int,
        bit_depth: int,
        subsampling: ChromaSubsampling,
        fps: Optional[Fraction] = None,
        full_range: bool = True,
    ):
        self.path = Path(path)
        self.width = width
        self.height = height
        self.bit_depth = bit_depth
        self.subsampling = subsampling
        self.fps = fps
        self.full_range = full_range

    @property
    def frame_bytes(self) -> int:
        return frame_bytes(self.width, self.height, self.bit_depth, self.subsampling)

    @property
    def frame_count(self) -> Optional[int]:
        return None

    def _decode(self, payload: bytes, index: int) -> PlanarFrame:
        return _decode_payload(
            payload, self.width, self.height, self.bit_depth, self.subsampling, index, self.full_range
        )

    def __iter__(self) -> Iterator[PlanarFrame]:
        raise NotImplementedError


class Y4mSource(FrameSource):
    """Y4M stream; 10/12-bit samples are 16-bit little-endian"""

    def __init__(self, path: PathLike, header_length: int, **kwargs):
        super().__init__(path, **kwargs)
        self.header_length = header_length

    def __iter__(self) -> Iterator[PlanarFrame]:
        size = self.frame_bytes
        with open(self.path, "rb") as f:
            f.seek(self.header_length)
            index = 0
            while True:
                offset = f.tell()
                line = f.readline()
                if not line:
                    return
                if not line.startswith(FRAME_MARKER) or not line.endswith(b"\n"):
                    raise FrameParseError(
                        f"Expected FRAME marker before frame {index}", offset=offset, path=str(self.path)
                    )
                payload = f.read(size)
                if len(payload) != size:
                    raise TruncationError(index, size, len(payload))
                yield self._decode(payload, index)
                index += 1


class RawYuvSource(FrameSource):
    """Headerless planar YUV (plane order Y, Cb, Cr)"""

    def __init__(self, path: PathLike, **kwargs):
        super().__init__(path, **kwargs)
        actual = self.path.stat().st_size
        if actual % self.frame_bytes:
            raise GeometryError(
                f"{self.path.name}: {actual} bytes is not a multiple of the {self.frame_bytes}-byte frame size",
                expected_frame_bytes=self.frame_bytes, actual_bytes=actual,
            )
        self._frame_count = actual // self.frame_bytes

    @property
    def frame_count(self) -> int:
        return self._frame_count

    def __iter__(self) -> Iterator[PlanarFrame]:
        size = self.frame_bytes
        with open(self.path, "rb") as f:
            for index in range(self._frame_count):
                payload = f.read(size)
                if len(payload) != size:
                    raise TruncationError(index, size, len(payload))
                yield self._decode(payload, index)


def _parse_y4m_header(line: bytes) -> dict:
    """Parse header tokens; offsets are relative to the file start"""
    tokens = {}
    offset = len(Y4M_SIGNATURE) + 1
    for raw in line[len(Y4M_SIGNATURE):].split(b" "):
        if not raw:
            continue
        try:
            token = raw.decode("ascii")
        except UnicodeDecodeError:
            raise FrameParseError("Non-ASCII header token", offset=offset)
        key, value = token[0], token[1:]
        if key in "WH":
            if not value.isdigit() or int(value) <= 0:
                raise FrameParseError(f"Invalid dimension token '{token}'", offset=offset)
            tokens[key] = int(value)
        elif key == "F":
            num, _, den = value.partition(":")
            if not (num.isdigit() and den.isdigit()) or int(den) == 0:
                raise FrameParseError(f"Invalid frame rate token '{token}'", offset=offset)
            tokens[key] = Fraction(int(num), int(den))
        elif key in "ICAX":
            tokens.setdefault(key, value)
        else:
            raise FrameParseError(f"Unknown header token '{token}'", offset=offset)
        offset += len(raw) + 1
    return tokens


def open_y4m(path: PathLike, full_range: bool = True) -> Y4mSource:
    """
    Open a Y4M file.

    Args:
        path: File path
        full_range: Normalize by the full code range (False: limited range)

    Returns:
        A frame source yielding PlanarFrame in display order
    """
    path = Path(path)
    with open(path, "rb") as f:
        line = f.readline(4096)
    if not line.startswith(Y4M_SIGNATURE + b" "):
        raise FrameParseError("Missing YUV4MPEG2 signature", offset=0, path=str(path))
    if not line.endswith(b"\n"):
        raise FrameParseError("Unterminated header line", offset=len(line), path=str(path))

    tokens = _parse_y4m_header(line.rstrip(b"\n"))
    for key in "WH":
        if key not in tokens:
            raise FrameParseError(f"Header is missing the {key} token", offset=len(line) - 1, path=str(path))

    interlace = tokens.get("I", "p")
    if interlace not in ("p", "?"):
        raise UnsupportedFormatError(f"Interlaced Y4M (I{interlace}) is not supported", tag=f"I{interlace}")

    tag = tokens.get("C", "420jpeg")
    if tag not in Y4M_COLORSPACES:
        raise UnsupportedFormatError(f"Unsupported Y4M colour space C{tag}", tag=f"C{tag}")
    subsampling, bit_depth = Y4M_COLORSPACES[tag]

    log.debug("y4m_opened", path=str(path), width=tokens["W"], height=tokens["H"], colorspace=tag)
    return Y4mSource(
        path,
        header_length=len(line),
        width=tokens["W"],
        height=tokens["H"],
        bit_depth=bit_depth,
        subsampling=subsampling,
        fps=tokens.get("F"),
        full_range=full_range,
    )


def open_raw_yuv(
    path: PathLike,
    width: int,
    height: int,
    bit_depth: int,
    subsampling: Union[ChromaSubsampling, str],
    full_range: bool = True,
) -> RawYuvSource:
    """Open a headerless planar YUV file"""
    if bit_depth not in (8, 10, 12):
        raise UnsupportedFormatError(f"Unsupported bit depth {bit_depth}", bit_depth=bit_depth)
    if width <= 0 or height <= 0:
        raise GeometryError(f"Invalid dimensions {width}x{height}", width=width, height=height)
    return RawYuvSource(
        path,
        width=width,
        height=height,
        bit_depth=bit_depth,
        subsampling=ChromaSubsampling(subsampling),
        full_range=full_range,
    )


_DIMS_RE = re.compile(r"(?:^|[_.-])(\d+)x(\d+)(?=$|[_.-])")
_DEPTH_RE = re.compile(r"(?:^|[_.-])(8|10|12)b(?:it)?(?=$|[_.-])")
_SUBSAMPLING_RE = re.compile(r"(?:^|[_.-])(?:yuv)?(420|444)p?(?=$|[_.-])")


def open_video(path: PathLike, settings=None) -> FrameSource:
    """
    Open any supported video. Raw files take their geometry from a
    `name_<W>x<H>_<bits>bit_<420|444>.yuv` style name, falling back to settings.
    """
    from .config import get_settings

    settings = settings or get_settings()
    path = Path(path)
    if path.suffix.lower() == ".y4m":
        return open_y4m(path, full_range=settings.full_range)

    stem = path.stem
    dims = _DIMS_RE.search(stem)
    depth = _DEPTH_RE.search(stem)
    sub = _SUBSAMPLING_RE.search(stem)
    width = int(dims.group(1)) if dims else settings.raw_width
    height = int(dims.group(2)) if dims else settings.raw_height
    if width is None or height is None:
        raise GeometryError(
            f"Cannot infer dimensions of {path.name}; name it *_<W>x<H>.yuv or set raw_width/raw_height",
            path=str(path),
        )
    return open_raw_yuv(
        path,
        width=width,
        height=height,
        bit_depth=int(depth.group(1)) if depth else settings.raw_bit_depth,
        subsampling=sub.group(1) if sub else settings.raw_subsampling,
        full_range=settings.full_range,
    )


# ============================================================================
# PAIRED STREAMS
# ============================================================================

class VideoPairStream:
    """Reference and test frames in lockstep"""

    def __init__(self, ref_source: FrameSource, test_source: FrameSource):
        self.ref_source = ref_source
        self.test_source = test_source
        self.fps = ref_source.fps
        counts = (ref_source.frame_count, test_source.frame_count)
        self.frame_count = counts[0] if counts[0] == counts[1] else None
        self._ref_iter = iter(ref_source)
        self._test_iter = iter(test_source)
        self._position = 0

    def next_pair(self) -> Optional[Tuple[PlanarFrame, PlanarFrame]]:
        """Next (reference, test) pair, or None at the end of both streams"""
        ref = next(self._ref_iter, None)
        test = next(self._test_iter, None)
        if ref is None and test is None:
            return None
        if ref is None:
            raise LengthMismatchError("reference", self._position)
        if test is None:
            raise LengthMismatchError("test", self._position)
        if ref.dims != test.dims or ref.chroma_subsampling != test.chroma_subsampling:
            raise DimensionMismatchError(
                f"Frame {self._position}: reference is {ref.width}x{ref.height} "
                f"({ref.chroma_subsampling.value}), test is {test.width}x{test.height} "
                f"({test.chroma_subsampling.value})",
                frame_index=self._position,
            )
        self._position += 1
        return ref, test

    def __iter__(self) -> Iterator[Tuple[PlanarFrame, PlanarFrame]]:
        while True:
            pair = self.next_pair()
            if pair is None:
                return
            yield pair


def next_pair(stream: VideoPairStream) -> Optional[Tuple[PlanarFrame, PlanarFrame]]:
    return stream.next_pair()


def open_pair(ref_path: PathLike, test_path: PathLike, settings=None) -> VideoPairStream:
    return VideoPairStream(open_video(ref_path, settings), open_video(test_path, settings))


# ============================================================================
# WRITERS
# ============================================================================

def encode_frame(frame: PlanarFrame, bit_depth: int, full_range: bool = True) -> bytes:
    """Planar payload of one frame at the given bit depth"""
    dtype = np.uint8 if bit_depth == 8 else np.dtype("<u2")
    parts = [
        quantize_samples(frame.y, bit_depth, full_range).astype(dtype),
        quantize_samples(frame.cb, bit_depth, full_range, chroma=True).astype(dtype),
        quantize_samples(frame.cr, bit_depth, full_range, chroma=True).astype(dtype),
    ]
    return b"".join(p.tobytes() for p in parts)


def _write_frames(f: BinaryIO, frames: Iterable[PlanarFrame], bit_depth: int, marker: bool) -> int:
    count = 0
    for frame in frames:
        if marker:
            f.write(FRAME_MARKER + b"\n")
        f.write(encode_frame(frame, bit_depth))
        count += 1
    return count


def write_raw_yuv(path: PathLike, frames: Iterable[PlanarFrame], bit_depth: int) -> int:
    """Write frames as raw planar YUV; returns the frame count"""
    with atomic_save(str(path), text_mode=False) as f:
        return _write_frames(f, frames, bit_depth, marker=False)


def write_y4m(
    path: PathLike,
    frames: List[PlanarFrame],
    bit_depth: int,
    fps: Fraction = Fraction(30, 1),
) -> int:
    """Write frames as a progressive Y4M file"""
    if not frames:
        raise GeometryError("Cannot write a Y4M file without frames")
    first = frames[0]
    tag = first.chroma_subsampling.value + ("" if bit_depth == 8 else f"p{bit_depth}")
    if tag not in Y4M_COLORSPACES:
        raise UnsupportedFormatError(f"Unsupported Y4M colour space C{tag}", tag=f"C{tag}")
    header = f"YUV4MPEG2 W{first.width} H{first.height} F{fps.numerator}:{fps.denominator} Ip A1:1 C{tag}\n"
    with atomic_save(str(path), text_mode=False) as f:
        f.write(header.encode("ascii"))
        return _write_frames(f, frames, bit_depth, marker=True)
