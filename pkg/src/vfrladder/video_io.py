"""Raw video ingestion (Y4M, headerless planar YUV), segmentation and
temporal resampling by frame dropping / frame duplication.

Only the luma plane is kept; chroma payloads are read and discarded.
Framerates are handled as exact fractions so decimation patterns for
ratios like 30 -> 24 fps are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO, Iterable, Iterator, Sequence

import numpy as np


class VideoFormatError(ValueError):
    """Malformed, truncated or unsupported raw video input."""


def as_fraction(fps) -> Fraction:
    if isinstance(fps, Fraction):
        return fps
    return Fraction(str(fps)) if isinstance(fps, float) else Fraction(fps)


@dataclass(frozen=True, eq=False)
class FrameY:
    """A single luma plane, shape (height, width)."""

    luma: np.ndarray
    bitdepth: int = 8

    def __post_init__(self):
        if self.luma.ndim != 2:
            raise ValueError("luma must be a 2-D array")
        if self.bitdepth not in (8, 10):
            raise ValueError(f"unsupported bitdepth {self.bitdepth}")
        if self.luma.size and (self.luma.min() < 0 or self.luma.max() >= 1 << self.bitdepth):
            raise ValueError(f"luma samples outside [0, {(1 << self.bitdepth) - 1}]")

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FrameY):
            return NotImplemented
        return self.bitdepth == other.bitdepth and np.array_equal(self.luma, other.luma)


@dataclass(frozen=True)
class Segment:
    frames: tuple[FrameY, ...]
    source_fps: Fraction
    duration_s: Fraction

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "source_fps", as_fraction(self.source_fps))
        object.__setattr__(self, "duration_s", as_fraction(self.duration_s))
        if not self.frames:
            raise ValueError("segment must contain at least one frame")
        first = self.frames[0]
        for f in self.frames[1:]:
            if f.luma.shape != first.luma.shape or f.bitdepth != first.bitdepth:
                raise ValueError("all frames in a segment must share dimensions and bitdepth")

    def __len__(self):
        return len(self.frames)


# chroma tag -> (horizontal subsampling, vertical subsampling, bitdepth); None = no chroma
_CHROMA = {
    "420": (2, 2, 8), "420jpeg": (2, 2, 8), "420paldv": (2, 2, 8), "420mpeg2": (2, 2, 8),
    "422": (2, 1, 8), "444": (1, 1, 8), "mono": (None, None, 8),
    "420p10": (2, 2, 10), "422p10": (2, 1, 10), "444p10": (1, 1, 10), "mono10": (None, None, 10),
}

_SIGNATURE = b"YUV4MPEG2"


def chroma_plane_samples(width: int, height: int, chroma: str) -> int:
    """Total samples of both chroma planes for one frame."""
    try:
        sx, sy, _ = _CHROMA[chroma]
    except KeyError:
        raise VideoFormatError(f"unsupported chroma tag C{chroma}") from None
    if sx is None:
        return 0
    return 2 * (-(-width // sx)) * (-(-height // sy))


def _luma_from_bytes(buf: bytes, width: int, height: int, bitdepth: int) -> np.ndarray:
    dtype = np.uint8 if bitdepth == 8 else np.dtype("<u2")
    luma = np.frombuffer(buf, dtype=dtype, count=width * height).reshape(height, width)
    if bitdepth == 10:
        luma = luma.astype(np.uint16)
        if luma.max(initial=0) >= 1 << 10:
            raise VideoFormatError("10-bit sample out of range")
    return luma.copy() if bitdepth == 8 else luma


class Y4MReader:
    """Sequential reader over a YUV4MPEG2 stream.

    Iterating yields `FrameY` objects in decode order. Header fields are
    available as attributes once constructed.
    """

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        self._offset = 0
        header = self._readline()
        if not header.startswith(_SIGNATURE):
            raise VideoFormatError("missing YUV4MPEG2 signature at byte 0")
        self.width = self.height = None
        self.fps = None
        self.chroma = "420"
        for token in header[len(_SIGNATURE):].split():
            key, val = chr(token[0]), token[1:].decode("ascii", errors="replace")
            if key == "W":
                self.width = int(val)
            elif key == "H":
                self.height = int(val)
            elif key == "F":
                num, _, den = val.partition(":")
                try:
                    self.fps = Fraction(int(num), int(den or 1))
                except (ValueError, ZeroDivisionError):
                    raise VideoFormatError(f"malformed header: bad framerate token F{val}") from None
            elif key == "C":
                self.chroma = val
        if not self.width or not self.height or self.width <= 0 or self.height <= 0:
            raise VideoFormatError("malformed header: missing or invalid W/H")
        if self.fps is None or self.fps <= 0:
            raise VideoFormatError("malformed header: missing or invalid F token")
        if self.chroma not in _CHROMA:
            raise VideoFormatError(f"unsupported chroma tag C{self.chroma}")
        self.bitdepth = _CHROMA[self.chroma][2]
        bps = 1 if self.bitdepth == 8 else 2
        self._luma_bytes = self.width * self.height * bps
        self._frame_bytes = self._luma_bytes + chroma_plane_samples(self.width, self.height, self.chroma) * bps

    def _readline(self) -> bytes:
        line = self._stream.readline()
        if line and not line.endswith(b"\n"):
            raise VideoFormatError(f"malformed header at byte {self._offset}: no terminating newline")
        self._offset += len(line)
        return line.rstrip(b"\n")

    def __iter__(self) -> Iterator[FrameY]:
        while True:
            start = self._offset
            marker = self._stream.readline()
            if not marker:
                return
            self._offset += len(marker)
            if not marker.startswith(b"FRAME"):
                raise VideoFormatError(f"expected FRAME marker at byte {start}")
            payload = self._stream.read(self._frame_bytes)
            self._offset += len(payload)
            if len(payload) < self._frame_bytes:
                raise VideoFormatError(
                    f"truncated frame at byte {start}: got {len(payload)} of {self._frame_bytes} bytes"
                )
            yield FrameY(_luma_from_bytes(payload[: self._luma_bytes], self.width, self.height, self.bitdepth),
                         self.bitdepth)


def read_y4m(stream: BinaryIO) -> Y4MReader:
    return Y4MReader(stream)


def read_raw_yuv(stream: BinaryIO, width: int, height: int, bitdepth: int = 8,
                 chroma: str = "420") -> Iterator[FrameY]:
    """Read headerless planar YUV. All geometry must be supplied by the caller."""
    if chroma not in ("420", "422", "444"):
        raise VideoFormatError(f"unsupported raw chroma layout {chroma}")
    bps = 1 if bitdepth == 8 else 2
    luma_bytes = width * height * bps
    frame_bytes = luma_bytes + chroma_plane_samples(width, height, chroma) * bps
    offset = 0
    while True:
        payload = stream.read(frame_bytes)
        if not payload:
            return
        if len(payload) < frame_bytes:
            raise VideoFormatError(
                f"truncated frame at byte {offset}: got {len(payload)} of {frame_bytes} bytes"
            )
        offset += frame_bytes
        yield FrameY(_luma_from_bytes(payload[:luma_bytes], width, height, bitdepth), bitdepth)


def write_y4m(stream: BinaryIO, frames: Iterable[FrameY], fps, chroma: str | None = None) -> None:
    """Write frames as Y4M with neutral (mid-level) chroma planes."""
    fps = as_fraction(fps)
    frames = iter(frames)
    first = next(frames)
    bitdepth = first.bitdepth
    if chroma is None:
        chroma = "420" if bitdepth == 8 else "420p10"
    h, w = first.luma.shape
    stream.write(f"YUV4MPEG2 W{w} H{h} F{fps.numerator}:{fps.denominator} Ip A1:1 C{chroma}\n".encode())
    n_chroma = chroma_plane_samples(w, h, chroma)
    dtype = np.uint8 if bitdepth == 8 else np.dtype("<u2")
    chroma_bytes = np.full(n_chroma, 1 << (bitdepth - 1), dtype=dtype).tobytes()
    for frame in (first, *frames):
        stream.write(b"FRAME\n")
        stream.write(np.ascontiguousarray(frame.luma, dtype=dtype).tobytes())
        stream.write(chroma_bytes)


def segment_stream(frames: Iterable[FrameY], source_fps, duration_s=4) -> Iterator[Segment]:
    """Split a frame stream into consecutive non-overlapping segments.

    Each segment holds round(source_fps * duration_s) frames; a trailing
    partial segment is emitted if it has at least one frame.
    """
    fps = as_fraction(source_fps)
    duration = as_fraction(duration_s)
    if duration <= 0:
        raise ValueError("duration_s must be positive")
    per_segment = max(1, round(fps * duration))
    buf: list[FrameY] = []
    for frame in frames:
        buf.append(frame)
        if len(buf) == per_segment:
            yield Segment(tuple(buf), fps, Fraction(len(buf)) / fps)
            buf = []
    if buf:
        yield Segment(tuple(buf), fps, Fraction(len(buf)) / fps)


def downsample_indices(n_frames: int, source_fps, target_fps) -> list[int]:
    """Indices kept by uniform decimation: i is kept iff floor(i * t / s) advances."""
    ratio = as_fraction(target_fps) / as_fraction(source_fps)
    kept, last = [], -1
    for i in range(n_frames):
        slot = math.floor(i * ratio)
        if slot > last:
            kept.append(i)
            last = slot
    return kept


def upsample_indices(n_source: int, source_fps, target_fps, n_out: int) -> list[int]:
    """Nearest-previous source index shown at each output instant k / target_fps."""
    ratio = as_fraction(source_fps) / as_fraction(target_fps)
    return [min(n_source - 1, math.floor(k * ratio)) for k in range(n_out)]


def temporal_downsample(segment: Segment, target_fps) -> Segment:
    target = as_fraction(target_fps)
    if target <= 0:
        raise ValueError("target_fps must be positive")
    if target > segment.source_fps:
        raise ValueError(f"target_fps {target} exceeds source_fps {segment.source_fps}")
    idx = downsample_indices(len(segment.frames), segment.source_fps, target)
    return Segment(tuple(segment.frames[i] for i in idx), target, segment.duration_s)


def temporal_upsample(segment: Segment, target_fps) -> Segment:
    """Duplicate frames up to `target_fps`.

    The output length is round(duration_s * target_fps), which equals
    round(N * target_fps / source_fps) for segments at their native rate and
    restores the exact original count after a downsample.
    """
    target = as_fraction(target_fps)
    if target < segment.source_fps:
        raise ValueError(f"target_fps {target} is below source_fps {segment.source_fps}")
    n_out = round(segment.duration_s * target)
    idx = upsample_indices(len(segment.frames), segment.source_fps, target, n_out)
    return Segment(tuple(segment.frames[i] for i in idx), target, segment.duration_s)


def frames_from_array(arr: np.ndarray, bitdepth: int = 8) -> list[FrameY]:
    """Wrap a (n, height, width) array as a list of frames."""
    return [FrameY(np.asarray(a), bitdepth) for a in arr]


def make_segment(frames: Sequence[FrameY], fps) -> Segment:
    fps = as_fraction(fps)
    return Segment(tuple(frames), fps, Fraction(len(frames)) / fps)
