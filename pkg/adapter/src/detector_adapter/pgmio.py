"""Minimal reader for the 8-bit binary PGM frames the renderer writes."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import GenerationError


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM file into a uint8 array of shape (h, w).

    Header tokens may be separated by any whitespace and ``#`` comments.
    Only maxval <= 255 is supported.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise GenerationError(f"cannot read frame: {exc}") from None

    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        ch = data[pos:pos + 1]
        if ch == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                break
            pos += 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace() and data[end:end + 1] != b"#":
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise GenerationError(f"{path.name}: not a binary PGM (P5) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise GenerationError(f"{path.name}: malformed PGM header") from None
    if width < 1 or height < 1 or not (0 < maxval <= 255):
        raise GenerationError(f"{path.name}: unsupported PGM geometry or maxval")
    pixels = data[pos + 1:]
    if len(pixels) < width * height:
        raise GenerationError(f"{path.name}: truncated PGM pixel data")
    return np.frombuffer(pixels[: width * height], dtype=np.uint8).reshape((height, width))
