"""Minimal 8-bit PGM reader/writer (P2 ascii and P5 binary)."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ._io import write_atomic


class PGMError(ValueError):
    pass


def _tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PGMError("truncated header")
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        out.append(data[start:pos])
    return out, pos


def parse_pgm(data: bytes) -> np.ndarray:
    magic, pos = _tokens(data, 1, 0)
    if magic[0] not in (b"P2", b"P5"):
        raise PGMError(f"not a PGM file (magic {magic[0]!r})")
    try:
        (w, h, maxval), pos = _tokens(data, 3, pos)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise PGMError(f"bad header: {exc}") from exc
    if width <= 0 or height <= 0:
        raise PGMError(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise PGMError(f"only 8-bit PGM is supported (maxval {maxval})")

    if magic[0] == b"P5":
        body = data[pos + 1:pos + 1 + width * height]  # one whitespace byte ends the header
        if len(body) != width * height:
            raise PGMError(f"expected {width * height} pixel bytes, got {len(body)}")
        pixels = np.frombuffer(body, dtype=np.uint8).copy()
    else:
        try:
            values, _ = _tokens(data, width * height, pos)
        except PGMError as exc:
            raise PGMError(f"expected {width * height} ascii pixel values") from exc
        pixels = np.array([int(v) for v in values], dtype=np.int64)
        if pixels.min() < 0 or pixels.max() > maxval:
            raise PGMError("pixel value outside [0, maxval]")
        pixels = pixels.astype(np.uint8)
    if maxval != 255:
        pixels = np.rint(pixels.astype(np.float64) * 255 / maxval).astype(np.uint8)
    return pixels.reshape(height, width)


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    return parse_pgm(Path(path).read_bytes())


def format_pgm(image: np.ndarray, binary: bool = True) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2:
        raise PGMError(f"expected a 2-D grayscale image, got shape {img.shape}")
    img = np.clip(img, 0, 255).astype(np.uint8)
    height, width = img.shape
    if binary:
        return f"P5\n{width} {height}\n255\n".encode("ascii") + img.tobytes()
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
    return f"P2\n{width} {height}\n255\n{rows}\n".encode("ascii")


def write_pgm(path: str | os.PathLike, image: np.ndarray, binary: bool = True) -> None:
    write_atomic(path, format_pgm(image, binary))
