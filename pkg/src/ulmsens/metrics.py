"""Windowed SSIM and masked PSNR between normalized SR maps.

SSIM follows the classic formulation: Gaussian-weighted local means,
variances and covariance inside an 11x11 window (sigma 1.5), biased
(population) moments with weights summing to one, and stabilizers
C1 = (k1*L)^2, C2 = (k2*L)^2.  Borders use edge-duplicating reflection
so the SSIM map keeps the input geometry, which keeps region-masked
means well defined up to the image edge.

PSNR is 10*log10(peak^2 / MSE) over the masked pixels, capped (default
100 dB) so the identical-image case stays finite and plottable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .render import SRMap, require_same_geometry


@dataclass(frozen=True)
class SsimParams:
    """SSIM window and stabilizer constants; defaults are the field standard."""

    window_radius: int = 5
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError(f"window_radius must be >= 1, got {self.window_radius}")
        if self.gaussian_sigma <= 0:
            raise ValueError(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be > 0")
        if self.dynamic_range <= 0:
            raise ValueError(f"dynamic_range must be > 0, got {self.dynamic_range}")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def kernel_1d(self) -> np.ndarray:
        k = np.arange(-self.window_radius, self.window_radius + 1, dtype=np.float64)
        w = np.exp(-(k * k) / (2.0 * self.gaussian_sigma**2))
        return w / w.sum()


REGION_ALL = "all"
REGION_DENSE = "dense"
REGION_SPARSE = "sparse"
REGION_LABELS = (REGION_ALL, REGION_DENSE, REGION_SPARSE)

DEFAULT_PSNR_CAP_DB = 100.0


@dataclass(frozen=True)
class MetricRecord:
    """One SSIM/PSNR measurement for a region of the grid."""

    ssim: float
    psnr: float
    region_label: str

    def __post_init__(self):
        if self.region_label not in REGION_LABELS:
            raise ValueError(f"region_label must be one of {REGION_LABELS}")
        if not (-1.0 <= self.ssim <= 1.0):
            raise ValueError(f"ssim must lie in [-1, 1], got {self.ssim}")
        if self.psnr < 0.0:
            raise ValueError(f"psnr must be >= 0, got {self.psnr}")


def _smooth_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """Correlate one axis with a short kernel under reflect padding.

    Reflection duplicates the edge sample (a b c -> b a | a b c | c b).
    The taps are summed in fixed ascending order, so results are
    bit-identical between runs regardless of any outer parallelism.
    """
    radius = (len(kernel) - 1) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="symmetric")
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    index = [slice(None), slice(None)]
    for k in range(len(kernel)):
        index[axis] = slice(k, k + n)
        out += kernel[k] * padded[tuple(index)]
    return out


def _smooth(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _smooth_axis(_smooth_axis(arr, kernel, 0), kernel, 1)


def ssim_map(reference: SRMap, test: SRMap, params: SsimParams | None = None) -> np.ndarray:
    """Per-pixel SSIM between two same-geometry maps; same shape as input."""
    params = params or SsimParams()
    require_same_geometry(reference, test, "SSIM inputs")
    x = reference.values
    y = test.values
    kernel = params.kernel_1d()

    mu_x = _smooth(x, kernel)
    mu_y = _smooth(y, kernel)
    mu_xx = _smooth(x * x, kernel)
    mu_yy = _smooth(y * y, kernel)
    mu_xy = _smooth(x * y, kernel)

    var_x = mu_xx - mu_x * mu_x
    var_y = mu_yy - mu_y * mu_y
    cov = mu_xy - mu_x * mu_y

    c1, c2 = params.c1, params.c2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    # Cauchy-Schwarz bounds the true value to [-1, 1]; clip the last-ulp
    # float noise so the bound holds exactly.
    return np.clip(num / den, -1.0, 1.0)


def masked_mean(grid: np.ndarray, mask: np.ndarray | None) -> float:
    """Mean of grid over mask (None = all pixels); empty masks are an error."""
    if mask is None:
        return float(grid.mean())
    selected = int(mask.sum())
    if selected == 0:
        raise ValueError("mask selects zero pixels")
    return float(grid[mask].mean())


def ssim_masked(
    reference: SRMap,
    test: SRMap,
    params: SsimParams | None = None,
    mask: np.ndarray | None = None,
) -> float:
    """Mean SSIM over the masked pixels; mask None reproduces the global mean."""
    return masked_mean(ssim_map(reference, test, params), mask)


def psnr_masked(
    reference: SRMap,
    test: SRMap,
    mask: np.ndarray | None = None,
    peak: float = 1.0,
    cap_db: float = DEFAULT_PSNR_CAP_DB,
) -> float:
    """PSNR in dB over the masked pixels, saturating at ``cap_db``.

    The cap makes the zero-MSE (identical images) case finite; any MSE
    small enough to exceed the cap saturates there too.
    """
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    require_same_geometry(reference, test, "PSNR inputs")
    diff = reference.values - test.values
    mse = masked_mean(diff * diff, mask)
    if mse == 0.0:
        return cap_db
    return min(10.0 * math.log10(peak * peak / mse), cap_db)
