"""Rasterize localization frames into super-resolution accumulation maps.

Each localization increments exactly one pixel (nearest-pixel counting,
no splatting), so the raw map total always equals the localization count.
For metric computation a reference/test pair is normalized *jointly* by
the reference maximum: per-map normalization would hide the intensity
inflation that false positives cause, which is the effect under study.

Two file formats are provided: 8-bit binary PGM for visual inspection,
and a lossless little-endian layout (uint32 width, uint32 height, then
float64 values row-major) for exact metric reuse.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import DataFormatError, GeometryError

_BIN_HEADER = struct.Struct("<II")


@dataclass(frozen=True)
class SRMap:
    """A 2-D accumulation grid; ``values`` has shape (height, width)."""

    width: int
    height: int
    pixel_size: float
    origin: tuple[float, float]   # (x_min, z_min)
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.height, self.width):
            raise ValueError(
                f"values shape {vals.shape} does not match (height, width)=({self.height}, {self.width})"
            )
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def same_geometry(self, other: "SRMap") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.pixel_size == other.pixel_size
            and self.origin == other.origin
        )

    def with_values(self, values: np.ndarray) -> "SRMap":
        return SRMap(self.width, self.height, self.pixel_size, self.origin, values)


def require_same_geometry(a: SRMap, b: SRMap, what: str = "maps") -> None:
    if not a.same_geometry(b):
        raise GeometryError(
            f"{what} have mismatched geometry: "
            f"{a.width}x{a.height}@{a.pixel_size} vs {b.width}x{b.height}@{b.pixel_size}"
        )


def rasterize(dataset: Dataset) -> SRMap:
    """Accumulate localization counts on the config's pixel lattice.

    Pixel index: col = min(floor((x - x_min)/p), width-1) and likewise for
    rows, so points exactly on the max boundary land in the last pixel.
    """
    config = dataset.config
    width, height = config.grid_width, config.grid_height
    p = config.pixel_size
    x0, z0 = config.fov.x_min, config.fov.z_min

    counts = np.zeros(height * width, dtype=np.int64)
    pts = dataset.all_points()
    if pts.shape[0]:
        cols = np.minimum(np.floor((pts[:, 0] - x0) / p).astype(np.int64), width - 1)
        rows = np.minimum(np.floor((pts[:, 1] - z0) / p).astype(np.int64), height - 1)
        counts = np.bincount(rows * width + cols, minlength=height * width)
    return SRMap(
        width=width,
        height=height,
        pixel_size=p,
        origin=(x0, z0),
        values=counts.reshape(height, width).astype(np.float64),
    )


def normalize_pair(reference: SRMap, test: SRMap) -> tuple[SRMap, SRMap]:
    """Scale both maps by the reference maximum; clip the test to [0, 1].

    An all-zero reference returns both maps all-zero, which keeps the
    degenerate empty-dataset case well defined.
    """
    require_same_geometry(reference, test)
    peak = float(reference.values.max()) if reference.values.size else 0.0
    if peak <= 0.0:
        zeros = np.zeros_like(reference.values)
        return reference.with_values(zeros), test.with_values(zeros.copy())
    ref = reference.values / peak
    tst = np.clip(test.values / peak, 0.0, 1.0)
    return reference.with_values(ref), test.with_values(tst)


def log_compress(srmap: SRMap, floor_db: float = -40.0) -> SRMap:
    """Map normalized values to a [0, 1] dB scale with the given floor.

    v -> (20*log10(v) - floor_db) / -floor_db, clipped; zeros map to 0.
    Off by default in the pipeline; provided for configs that want it.
    """
    if floor_db >= 0:
        raise ValueError(f"floor_db must be negative, got {floor_db}")
    v = srmap.values
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.where(v > 0, v, 1.0))
    db = np.where(v > 0, np.maximum(db, floor_db), floor_db)
    return srmap.with_values((db - floor_db) / (-floor_db))


def quantize_unit(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to uint8 via round-half-up of 255*v."""
    return np.clip(np.floor(values * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)


def write_srmap_pgm(srmap: SRMap, path) -> None:
    """Write a normalized map ([0, 1] values) as binary PGM."""
    from .pgm import write_pgm

    v = srmap.values
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        raise ValueError("PGM export requires values in [0, 1]; normalize the map first")
    write_pgm(path, quantize_unit(v))


def write_grid_bin(path, values: np.ndarray) -> None:
    """Lossless grid dump: uint32 width, uint32 height, float64 row-major."""
    arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {arr.shape}")
    height, width = arr.shape
    payload = _BIN_HEADER.pack(width, height) + arr.astype("<f8").tobytes()
    Path(path).write_bytes(payload)


def read_grid_bin(path) -> np.ndarray:
    """Read a grid written by :func:`write_grid_bin`."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise DataFormatError(f"{path}: truncated grid file")
    width, height = _BIN_HEADER.unpack_from(raw)
    expected = _BIN_HEADER.size + 8 * width * height
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: size {len(raw)} does not match {width}x{height} grid ({expected} bytes)"
        )
    vals = np.frombuffer(raw, dtype="<f8", offset=_BIN_HEADER.size)
    return vals.reshape(height, width).astype(np.float64)


def map_total(srmap: SRMap) -> float:
    """Sum of all pixel values (equals the localization count pre-normalization)."""
    return float(srmap.values.sum())
