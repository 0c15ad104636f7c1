"""Run configuration: one JSON document driving every pipeline stage.

Top-level sections: ``imaging``, ``synth``, ``kde``, ``ssim``, ``sweep``,
``output``.  Every key is validated before any work starts and unknown
keys are rejected outright; the merged effective configuration is echoed
into the output directory as ``config.echo.json`` so that the echo file
plus the inputs determine every output byte.

The built-in defaults define the reproducible reference experiment: a
7.24 MHz configuration whose FOV spans exactly 512 x 512 super-resolution
pixels, a 500-frame synthetic vasculature, a 0-20% error grid in 5%
steps, and three repetitions per cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dataset import Fov, ImagingConfig, imaging_config_from_dict, imaging_config_to_dict
from .density import DEFAULT_BANDWIDTH_WAVELENGTHS, DEFAULT_QUANTILE
from .errors import ConfigError
from .metrics import DEFAULT_PSNR_CAP_DB, SsimParams
from .sweep import DEFAULT_RATES, SweepSpec

DEFAULT_CENTER_FREQUENCY_HZ = 7.24e6
DEFAULT_SOUND_SPEED_M_S = 1540.0
DEFAULT_SR_PIXELS_PER_WAVELENGTH = 10
DEFAULT_GRID_PIXELS = 512


@dataclass(frozen=True)
class SynthParams:
    seed: int = 1
    n_trunk: int = 2
    branching_depth: int = 2
    n_frames: int = 500
    trunk_rate: float = 260.0
    mesh_segments: int = 612
    jitter_wavelengths: float = 0.05

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {self.n_frames}")
        if self.jitter_wavelengths < 0:
            raise ValueError(f"jitter_wavelengths must be >= 0, got {self.jitter_wavelengths}")


@dataclass(frozen=True)
class KdeParams:
    bandwidth_wavelengths: float = DEFAULT_BANDWIDTH_WAVELENGTHS
    quantile: float = DEFAULT_QUANTILE

    def __post_init__(self):
        if self.bandwidth_wavelengths <= 0:
            raise ValueError(
                f"bandwidth_wavelengths must be > 0, got {self.bandwidth_wavelengths}"
            )
        if not (0.0 <= self.quantile <= 1.0):
            raise ValueError(f"quantile must be in [0, 1], got {self.quantile}")


@dataclass(frozen=True)
class OutputParams:
    fixed_scale: bool = True
    log_compress: bool = True
    psnr_cap_db: float = DEFAULT_PSNR_CAP_DB

    def __post_init__(self):
        if self.psnr_cap_db <= 0:
            raise ValueError(f"psnr_cap_db must be > 0, got {self.psnr_cap_db}")


@dataclass(frozen=True)
class RunConfig:
    imaging: ImagingConfig
    synth: SynthParams
    kde: KdeParams
    ssim: SsimParams
    sweep: SweepSpec
    output: OutputParams

    @property
    def kde_bandwidth(self) -> float:
        return self.kde.bandwidth_wavelengths * self.imaging.wavelength


def default_imaging_config() -> ImagingConfig:
    """The reference imaging geometry: exactly 512 x 512 SR pixels.

    The FOV is built from the pixel size so the grid dimensions come out
    as whole numbers with no ceiling slack.
    """
    pixel = (DEFAULT_SOUND_SPEED_M_S / DEFAULT_CENTER_FREQUENCY_HZ) / DEFAULT_SR_PIXELS_PER_WAVELENGTH
    half_x = 256 * pixel
    return ImagingConfig(
        center_frequency=DEFAULT_CENTER_FREQUENCY_HZ,
        sound_speed=DEFAULT_SOUND_SPEED_M_S,
        fov=Fov(x_min=-half_x, x_max=half_x, z_min=0.0, z_max=DEFAULT_GRID_PIXELS * pixel),
        sr_pixels_per_wavelength=DEFAULT_SR_PIXELS_PER_WAVELENGTH,
    )


def default_run_config() -> RunConfig:
    return RunConfig(
        imaging=default_imaging_config(),
        synth=SynthParams(),
        kde=KdeParams(),
        ssim=SsimParams(),
        sweep=SweepSpec(fp_rates=DEFAULT_RATES, fn_rates=DEFAULT_RATES, repetitions=3, master_seed=7),
        output=OutputParams(),
    )


_SECTION_KEYS = {"imaging", "synth", "kde", "ssim", "sweep", "output"}


def _parse_section(doc: dict, name: str, factory, field_types: dict):
    section = doc.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section '{name}' must be an object")
    unknown = set(section) - set(field_types)
    if unknown:
        raise ConfigError(f"config section '{name}': unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in section.items():
        expected = field_types[key]
        try:
            if expected is int:
                if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                    raise ValueError(f"expected an integer, got {value!r}")
                kwargs[key] = int(value)
            elif expected is float:
                if isinstance(value, bool):
                    raise ValueError(f"expected a number, got {value!r}")
                kwargs[key] = float(value)
            elif expected is bool:
                if not isinstance(value, bool):
                    raise ValueError(f"expected true/false, got {value!r}")
                kwargs[key] = value
            elif expected is tuple:
                if not isinstance(value, (list, tuple)):
                    raise ValueError(f"expected a list, got {value!r}")
                kwargs[key] = tuple(float(v) for v in value)
            else:
                kwargs[key] = value
        except (TypeError, ValueError) as e:
            raise ConfigError(f"config section '{name}', key '{key}': {e}") from e
    try:
        return factory(**kwargs)
    except ValueError as e:
        raise ConfigError(f"config section '{name}': {e}") from e


def run_config_from_dict(doc: dict) -> RunConfig:
    """Parse and validate a full configuration document."""
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a JSON object, got {type(doc).__name__}")
    unknown = set(doc) - _SECTION_KEYS
    if unknown:
        raise ConfigError(f"config: unknown top-level keys {sorted(unknown)}")

    imaging = imaging_config_from_dict(doc["imaging"]) if "imaging" in doc else default_imaging_config()
    synth = _parse_section(
        doc, "synth", SynthParams,
        {"seed": int, "n_trunk": int, "branching_depth": int, "n_frames": int,
         "trunk_rate": float, "mesh_segments": int, "jitter_wavelengths": float},
    )
    kde = _parse_section(
        doc, "kde", KdeParams, {"bandwidth_wavelengths": float, "quantile": float}
    )
    ssim = _parse_section(
        doc, "ssim", SsimParams,
        {"window_radius": int, "gaussian_sigma": float, "k1": float, "k2": float,
         "dynamic_range": float},
    )
    sweep_defaults = default_run_config().sweep
    sweep = _parse_section(
        doc, "sweep",
        lambda **kw: SweepSpec(**{
            "fp_rates": sweep_defaults.fp_rates,
            "fn_rates": sweep_defaults.fn_rates,
            "repetitions": sweep_defaults.repetitions,
            "master_seed": sweep_defaults.master_seed,
            **kw,
        }),
        {"fp_rates": tuple, "fn_rates": tuple, "repetitions": int, "master_seed": int},
    )
    output = _parse_section(
        doc, "output", OutputParams,
        {"fixed_scale": bool, "log_compress": bool, "psnr_cap_db": float},
    )
    return RunConfig(imaging=imaging, synth=synth, kde=kde, ssim=ssim, sweep=sweep, output=output)


def run_config_to_dict(config: RunConfig) -> dict:
    """Full effective configuration, suitable for the echo file."""
    return {
        "imaging": imaging_config_to_dict(config.imaging),
        "synth": {
            "seed": config.synth.seed,
            "n_trunk": config.synth.n_trunk,
            "branching_depth": config.synth.branching_depth,
            "n_frames": config.synth.n_frames,
            "trunk_rate": config.synth.trunk_rate,
            "mesh_segments": config.synth.mesh_segments,
            "jitter_wavelengths": config.synth.jitter_wavelengths,
        },
        "kde": {
            "bandwidth_wavelengths": config.kde.bandwidth_wavelengths,
            "quantile": config.kde.quantile,
        },
        "ssim": {
            "window_radius": config.ssim.window_radius,
            "gaussian_sigma": config.ssim.gaussian_sigma,
            "k1": config.ssim.k1,
            "k2": config.ssim.k2,
            "dynamic_range": config.ssim.dynamic_range,
        },
        "sweep": {
            "fp_rates": list(config.sweep.fp_rates),
            "fn_rates": list(config.sweep.fn_rates),
            "repetitions": config.sweep.repetitions,
            "master_seed": config.sweep.master_seed,
        },
        "output": {
            "fixed_scale": config.output.fixed_scale,
            "log_compress": config.output.log_compress,
            "psnr_cap_db": config.output.psnr_cap_db,
        },
    }


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return run_config_from_dict(doc)


def echo_config(config: RunConfig, out_dir) -> Path:
    """Write the effective configuration as config.echo.json; returns the path."""
    out = Path(out_dir) / "config.echo.json"
    out.write_text(
        json.dumps(run_config_to_dict(config), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return out
