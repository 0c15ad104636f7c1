"""Sensitivity of ULM super-resolution maps to microbubble detection errors.

Library layout mirrors the pipeline: synthesize or load ground-truth
localizations (`dataset`, `synthgen`), inject controlled false positives
and negatives (`inject`), rasterize to super-resolution maps (`render`),
segment dense/sparse regions via Gaussian KDE (`density`), score with
SSIM and PSNR (`metrics`), sweep an error-rate grid (`sweep`), and render
reports (`report`).  The `cli` module exposes the same stages as
subcommands.
"""

from .dataset import Dataset, Fov, ImagingConfig, LocalizationFrame, load_csv, save_csv, wavelength
from .density import DensityMap, RegionMask, kde_density, mask_coverage, threshold_mask
from .inject import (
    ErrorProfile,
    apply_error_profile,
    inject_false_negatives,
    inject_false_positives,
)
from .metrics import MetricRecord, SsimParams, psnr_masked, ssim_map, ssim_masked
from .render import SRMap, normalize_pair, rasterize
from .sweep import SweepResult, SweepSpec, aggregate, run_sweep
from .synthgen import BezierSegment, VesselTree, generate_vessels, sample_frames

__version__ = "0.1.0"

__all__ = [
    "BezierSegment",
    "Dataset",
    "DensityMap",
    "ErrorProfile",
    "Fov",
    "ImagingConfig",
    "LocalizationFrame",
    "MetricRecord",
    "RegionMask",
    "SRMap",
    "SsimParams",
    "SweepResult",
    "SweepSpec",
    "VesselTree",
    "aggregate",
    "apply_error_profile",
    "generate_vessels",
    "inject_false_negatives",
    "inject_false_positives",
    "kde_density",
    "load_csv",
    "mask_coverage",
    "normalize_pair",
    "psnr_masked",
    "rasterize",
    "run_sweep",
    "sample_frames",
    "save_csv",
    "ssim_map",
    "ssim_masked",
    "threshold_mask",
    "wavelength",
]
