"""Grayscale frame containers, binary PGM (P5) I/O, and sub-pixel sampling.

Coordinate convention: ``(0, 0)`` is the centre of the top-left pixel, the
x axis (``u``) grows rightward and the y axis (``v``) grows downward.
Intensities are float64 in ``[0, 1]``; a stored byte ``b`` maps to ``b / maxval``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import PgmError


class Rect(NamedTuple):
    """Integer pixel rectangle: top-left corner plus extent."""

    x: int
    y: int
    w: int
    h: int

    @property
    def x1(self) -> int:
        return self.x + self.w

    @property
    def y1(self) -> int:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Frame:
    """Immutable grayscale raster with row-major float64 pixels in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64))
        if px.ndim != 2 or px.size == 0:
            raise ValueError("frame pixels must form a non-empty 2-D array")
        if not np.isfinite(px).all():
            raise ValueError("frame intensities must be finite")
        lo = float(px.min())
        hi = float(px.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"frame intensities must lie in [0, 1], got [{lo:g}, {hi:g}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class FrameSequence:
    """Frames of identical size with a fixed rate and source frame indices."""

    frames: tuple[Frame, ...]
    fps: float
    frame_indices: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a frame sequence needs at least one frame")
        if not (self.fps > 0):
            raise ValueError("fps must be positive")
        shape = frames[0].shape
        for i, fr in enumerate(frames):
            if fr.shape != shape:
                raise ValueError(f"frame {i} has shape {fr.shape}, expected {shape}")
        indices = tuple(self.frame_indices) or tuple(range(len(frames)))
        if len(indices) != len(frames):
            raise ValueError("frame_indices length must match the frame count")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("frame_indices must be strictly increasing")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_indices", indices)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


class CropResult(NamedTuple):
    """A cropped frame plus the integer rectangle that was actually applied."""

    frame: Frame
    rect: Rect


_WHITESPACE = b" \t\r\n\x0b\x0c"


def load_pgm(data: bytes) -> Frame:
    """Parse a binary (P5) PGM image.

    Header tokens may be separated by whitespace and ``#`` comments.  Only
    ``maxval <= 255`` (one byte per pixel) is supported.  Parse failures
    report the byte offset of the offending data.
    """
    if hasattr(data, "read"):
        data = data.read()  # type: ignore[union-attr]
    pos = 0
    n = len(data)

    def skip_separators(pos: int) -> int:
        while pos < n:
            c = data[pos : pos + 1]
            if c in (b"#",):
                while pos < n and data[pos : pos + 1] != b"\n":
                    pos += 1
            elif c in _WHITESPACE:
                pos += 1
            else:
                break
        return pos

    def next_token(pos: int, what: str) -> tuple[bytes, int]:
        pos = skip_separators(pos)
        if pos >= n:
            raise PgmError(f"unexpected end of data at byte {pos} while reading {what}")
        start = pos
        while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
            pos += 1
        return data[start:pos], pos

    magic, pos = next_token(pos, "magic number")
    if magic != b"P5":
        raise PgmError(f"expected magic 'P5' at byte 0, got {magic!r}")

    fields = {}
    for name in ("width", "height", "maxval"):
        token, token_end = next_token(pos, name)
        if not re.fullmatch(rb"\d+", token):
            raise PgmError(f"invalid {name} token {token!r} at byte {token_end - len(token)}")
        fields[name] = int(token)
        pos = token_end

    width, height, maxval = fields["width"], fields["height"], fields["maxval"]
    if width == 0 or height == 0:
        raise PgmError(f"zero image dimension in header (byte {pos})")
    if not (0 < maxval <= 255):
        raise PgmError(f"unsupported maxval {maxval} at byte {pos}; only 1..255 is supported")

    if pos >= n or data[pos : pos + 1] not in _WHITESPACE:
        raise PgmError(f"expected single whitespace after maxval at byte {pos}")
    pos += 1

    expected = width * height
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise PgmError(
            f"truncated pixel payload at byte {pos + len(payload)}: "
            f"expected {expected} bytes, got {len(payload)}"
        )
    raw = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Frame(raw.astype(np.float64) / float(maxval))


def save_pgm(frame: Frame, maxval: int = 255) -> bytes:
    """Serialise a frame as binary PGM, quantising with round-half-up."""
    if not (0 < maxval <= 255):
        raise ValueError("maxval must lie in 1..255")
    header = f"P5\n{frame.width} {frame.height}\n{maxval}\n".encode("ascii")
    quantised = np.floor(frame.pixels * maxval + 0.5).astype(np.uint8)
    return header + quantised.tobytes()


def load_pgm_file(path: str | Path) -> Frame:
    return load_pgm(Path(path).read_bytes())


def save_pgm_file(frame: Frame, path: str | Path) -> None:
    Path(path).write_bytes(save_pgm(frame))


def bilinear_sample(frame: Frame | np.ndarray, x, y):
    """Sample intensities at sub-pixel positions by bilinear interpolation.

    ``x`` and ``y`` may be scalars or equal-shaped arrays and must satisfy
    ``0 <= x <= width - 1`` and ``0 <= y <= height - 1``; integer coordinates
    reproduce the stored pixel exactly.  Scalar input returns a float.
    """
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    h, w = px.shape
    scalar = np.isscalar(x) and np.isscalar(y)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same shape")
    if x.size and (x.min() < 0 or x.max() > w - 1 or y.min() < 0 or y.max() > h - 1):
        raise ValueError(
            f"sample coordinates must lie within [0, {w - 1}] x [0, {h - 1}]"
        )
    x0 = np.minimum(np.floor(x).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.intp), max(h - 2, 0))
    fx = x - x0
    fy = y - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = px[y0, x0] * (1.0 - fx) + px[y0, x1] * fx
    bottom = px[y1, x0] * (1.0 - fx) + px[y1, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    return float(out) if scalar else out


def crop(frame: Frame, rect: Rect | Sequence[int]) -> CropResult:
    """Extract the part of ``rect`` that intersects the frame.

    The returned rectangle records the clamped region so callers can map
    crop-local coordinates back to the source frame.
    """
    x, y, w, h = (int(v) for v in rect)
    x0 = max(x, 0)
    y0 = max(y, 0)
    x1 = min(x + w, frame.width)
    y1 = min(y + h, frame.height)
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"crop rectangle {tuple(rect)} does not intersect the frame")
    applied = Rect(x0, y0, x1 - x0, y1 - y0)
    return CropResult(Frame(frame.pixels[y0:y1, x0:x1]), applied)
