"""Minimal binary PGM (P5, maxval 255) writer and reader.

PGM is the bit-exact raster interchange used across the package; output
bytes depend only on the pixel array, never on the environment.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DataFormatError


def pgm_bytes(gray: np.ndarray) -> bytes:
    gray = np.asarray(gray)
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError(f"expected a 2-D uint8 array, got {gray.dtype} shape {gray.shape}")
    height, width = gray.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(gray).tobytes()


def write_pgm(path, gray: np.ndarray) -> None:
    Path(path).write_bytes(pgm_bytes(gray))


def read_pgm(path) -> np.ndarray:
    """Parse a binary PGM written by :func:`write_pgm` (strict P5/255)."""
    path = Path(path)
    raw = path.read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise DataFormatError(f"{path}: not a maxval-255 binary PGM")
    try:
        width, height = (int(tok) for tok in parts[1].split())
    except ValueError:
        raise DataFormatError(f"{path}: malformed PGM dimension line") from None
    pixels = parts[3]
    if len(pixels) != width * height:
        raise DataFormatError(
            f"{path}: pixel payload {len(pixels)} bytes, expected {width * height}"
        )
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width).copy()
