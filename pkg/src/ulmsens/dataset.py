"""Localization datasets and imaging geometry.

A dataset is an ordered sequence of frames, each holding the (x, z)
positions of the microbubbles localized in that frame, in meters.  The
imaging configuration fixes the acoustic wavelength and, through it, the
super-resolution pixel lattice every downstream grid uses.

CSV interchange format (UTF-8, LF): header ``frame,x,z``, one row per
localization, frame index as a base-10 non-negative integer, coordinates
as decimal meters.  Coordinates are written with 17 significant digits so
a load/save cycle is lossless for any finite double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError

CSV_HEADER = "frame,x,z"


@dataclass(frozen=True)
class Fov:
    """Axis-aligned field of view in meters; closed on all boundaries."""

    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max):
            raise ValueError(f"FOV requires x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if not (self.z_min < self.z_max):
            raise ValueError(f"FOV requires z_min < z_max, got [{self.z_min}, {self.z_max}]")

    @property
    def x_extent(self) -> float:
        return self.x_max - self.x_min

    @property
    def z_extent(self) -> float:
        return self.z_max - self.z_min

    def contains(self, x: float, z: float) -> bool:
        return self.x_min <= x <= self.x_max and self.z_min <= z <= self.z_max


@dataclass(frozen=True)
class ImagingConfig:
    """Imaging geometry: center frequency, sound speed, FOV, grid factor.

    The super-resolution pixel size is ``wavelength / sr_pixels_per_wavelength``
    with wavelength = sound_speed / center_frequency.  Grid dimensions are
    ``ceil(extent / pixel_size)`` per axis and depend on nothing else.
    """

    center_frequency: float
    fov: Fov
    sound_speed: float = 1540.0
    sr_pixels_per_wavelength: int = 10

    def __post_init__(self):
        if not (self.center_frequency > 0):
            raise ValueError(f"center_frequency must be > 0, got {self.center_frequency}")
        if not (self.sound_speed > 0):
            raise ValueError(f"sound_speed must be > 0, got {self.sound_speed}")
        if not (isinstance(self.sr_pixels_per_wavelength, int) and self.sr_pixels_per_wavelength >= 1):
            raise ValueError(
                f"sr_pixels_per_wavelength must be a positive integer, got {self.sr_pixels_per_wavelength}"
            )

    @property
    def wavelength(self) -> float:
        return self.sound_speed / self.center_frequency

    @property
    def pixel_size(self) -> float:
        return self.wavelength / self.sr_pixels_per_wavelength

    @property
    def grid_width(self) -> int:
        return max(1, math.ceil(self.fov.x_extent / self.pixel_size))

    @property
    def grid_height(self) -> int:
        return max(1, math.ceil(self.fov.z_extent / self.pixel_size))

    @property
    def grid_shape(self) -> tuple[int, int]:
        """(height, width) of the super-resolution grid."""
        return self.grid_height, self.grid_width


def wavelength(config: ImagingConfig) -> float:
    """Acoustic wavelength in meters: sound_speed / center_frequency."""
    return config.wavelength


def _as_point_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"points must be an (n, 2) array of (x, z), got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LocalizationFrame:
    """One frame of microbubble localizations; positions in meters."""

    frame_index: int
    points: np.ndarray = field(default_factory=lambda: _as_point_array([]))

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        object.__setattr__(self, "points", _as_point_array(self.points))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Imaging configuration plus frames sorted by ascending frame index."""

    config: ImagingConfig
    frames: tuple[LocalizationFrame, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        indices = [f.frame_index for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("frames must be sorted by strictly ascending frame_index")
        fov = self.config.fov
        for f in self.frames:
            pts = f.points
            if len(pts) == 0:
                continue
            ok = (
                (pts[:, 0] >= fov.x_min) & (pts[:, 0] <= fov.x_max)
                & (pts[:, 1] >= fov.z_min) & (pts[:, 1] <= fov.z_max)
            )
            if not ok.all():
                bad = int(np.flatnonzero(~ok)[0])
                x, z = pts[bad]
                raise ValueError(
                    f"frame {f.frame_index}: point ({x!r}, {z!r}) lies outside the FOV"
                )

    @property
    def total_points(self) -> int:
        return sum(len(f) for f in self.frames)

    def all_points(self) -> np.ndarray:
        """All localizations of all frames as one (n, 2) array."""
        if not self.frames:
            return np.zeros((0, 2), dtype=np.float64)
        return np.concatenate([f.points for f in self.frames], axis=0)


def save_csv(dataset: Dataset, path) -> None:
    """Write ``frame,x,z`` rows; coordinates with 17 significant digits."""
    path = Path(path)
    lines = [CSV_HEADER]
    for f in dataset.frames:
        idx = f.frame_index
        for x, z in f.points:
            lines.append(f"{idx},{x:.17g},{z:.17g}")
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write dataset CSV to {path}: {e}") from e


def load_csv(path, config: ImagingConfig) -> Dataset:
    """Parse a localization CSV into a Dataset validated against ``config``.

    Rows are grouped by frame index; within a frame, points keep file
    order.  Frame indices absent from the file simply do not appear (they
    are treated as empty at render time).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot read dataset CSV from {path}: {e}") from e

    lines = text.splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file, expected header '{CSV_HEADER}'")
    if lines[0].strip() != CSV_HEADER:
        raise DataFormatError(f"{path}: line 1: expected header '{CSV_HEADER}', got {lines[0]!r}")

    by_frame: dict[int, list[tuple[float, float]]] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        parts = raw.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"{path}: line {lineno}: expected 3 fields, got {len(parts)}")
        s_frame, s_x, s_z = (p.strip() for p in parts)
        if not s_frame.isdigit():
            raise DataFormatError(
                f"{path}: line {lineno}: frame index must be a non-negative integer, got {s_frame!r}"
            )
        try:
            x = float(s_x)
            z = float(s_z)
        except ValueError:
            raise DataFormatError(f"{path}: line {lineno}: non-numeric coordinate") from None
        if not (math.isfinite(x) and math.isfinite(z)):
            raise DataFormatError(f"{path}: line {lineno}: non-finite coordinate")
        by_frame.setdefault(int(s_frame), []).append((x, z))

    frames = tuple(
        LocalizationFrame(frame_index=idx, points=np.array(pts, dtype=np.float64))
        for idx, pts in sorted(by_frame.items())
    )
    return Dataset(config=config, frames=frames)


def imaging_config_from_dict(doc: dict) -> ImagingConfig:
    """Build an ImagingConfig from its JSON document form.

    Keys: ``center_frequency_hz``, ``sound_speed_m_s``, ``fov_m`` (object
    with x_min/x_max/z_min/z_max), ``sr_pixels_per_wavelength``.  Unknown
    keys are rejected.
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"imaging config must be an object, got {type(doc).__name__}")
    allowed = {"center_frequency_hz", "sound_speed_m_s", "fov_m", "sr_pixels_per_wavelength"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"imaging config: unknown keys {sorted(unknown)}")
    if "center_frequency_hz" not in doc or "fov_m" not in doc:
        raise ConfigError("imaging config requires 'center_frequency_hz' and 'fov_m'")
    fov_doc = doc["fov_m"]
    if not isinstance(fov_doc, dict):
        raise ConfigError("imaging config: 'fov_m' must be an object")
    fov_keys = {"x_min", "x_max", "z_min", "z_max"}
    if set(fov_doc) != fov_keys:
        raise ConfigError(f"imaging config: 'fov_m' must have exactly keys {sorted(fov_keys)}")
    try:
        fov = Fov(
            x_min=float(fov_doc["x_min"]),
            x_max=float(fov_doc["x_max"]),
            z_min=float(fov_doc["z_min"]),
            z_max=float(fov_doc["z_max"]),
        )
        sr = doc.get("sr_pixels_per_wavelength", 10)
        if isinstance(sr, float):
            if not sr.is_integer():
                raise ValueError(f"sr_pixels_per_wavelength must be an integer, got {sr}")
            sr = int(sr)
        return ImagingConfig(
            center_frequency=float(doc["center_frequency_hz"]),
            sound_speed=float(doc.get("sound_speed_m_s", 1540.0)),
            fov=fov,
            sr_pixels_per_wavelength=sr,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"imaging config: {e}") from e


def imaging_config_to_dict(config: ImagingConfig) -> dict:
    return {
        "center_frequency_hz": config.center_frequency,
        "sound_speed_m_s": config.sound_speed,
        "fov_m": {
            "x_min": config.fov.x_min,
            "x_max": config.fov.x_max,
            "z_min": config.fov.z_min,
            "z_max": config.fov.z_max,
        },
        "sr_pixels_per_wavelength": config.sr_pixels_per_wavelength,
    }
