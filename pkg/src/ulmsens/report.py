"""Render sweep results and map snapshots to image files.

Two output flavors exist side by side:

* bit-exact PGM rasters (`{metric}_{region}.pgm`, `srmap.pgm`,
  `density.pgm`, `mask.pgm`) whose bytes depend only on the data; and
* matplotlib figures (PNG) with labeled axes and annotated cells, for
  humans, written alongside the delimited output by the CLI report path.

Heatmap cells are laid out with false-negative rates increasing downward
and false-positive rates increasing rightward.  Fixed value scaling
(SSIM on [0, 1], PSNR on [0, cap]) is the default so images from
different runs are directly comparable; data-range scaling sits behind a
flag.
"""

from __future__ import annotations

import numpy as np

from .density import DensityMap, RegionMask
from .metrics import DEFAULT_PSNR_CAP_DB
from .render import SRMap, quantize_unit
from .sweep import AggregateRow

HEATMAP_BLOCK_PIXELS = 32

METRIC_SSIM = "ssim"
METRIC_PSNR = "psnr"


def _grid_from_aggregate(
    rows: tuple[AggregateRow, ...], metric: str, region: str
) -> tuple[np.ndarray, list[float], list[float]]:
    """(fn x fp) matrix of per-cell means, plus the sorted rate axes."""
    if metric not in (METRIC_SSIM, METRIC_PSNR):
        raise ValueError(f"metric must be 'ssim' or 'psnr', got {metric!r}")
    fp_rates = sorted({r.fp_rate for r in rows})
    fn_rates = sorted({r.fn_rate for r in rows})
    cells = {
        (r.fp_rate, r.fn_rate): (r.ssim_mean if metric == METRIC_SSIM else r.psnr_mean)
        for r in rows
        if r.region == region
    }
    grid = np.empty((len(fn_rates), len(fp_rates)), dtype=np.float64)
    for row, fn in enumerate(fn_rates):
        for col, fp in enumerate(fp_rates):
            if (fp, fn) not in cells:
                raise ValueError(f"aggregate is missing cell (fp={fp}, fn={fn}) for {region}")
            grid[row, col] = cells[(fp, fn)]
    if not np.isfinite(grid).all():
        raise ValueError("heatmap values must be finite")
    return grid, fp_rates, fn_rates


def _scale_range(
    grid: np.ndarray, metric: str, fixed_scale: bool, cap_db: float
) -> tuple[float, float]:
    if fixed_scale:
        return (0.0, 1.0) if metric == METRIC_SSIM else (0.0, cap_db)
    return float(grid.min()), float(grid.max())


def render_heatmap(
    rows: tuple[AggregateRow, ...],
    metric: str,
    region: str,
    fixed_scale: bool = True,
    cap_db: float = DEFAULT_PSNR_CAP_DB,
    block: int = HEATMAP_BLOCK_PIXELS,
) -> np.ndarray:
    """Heatmap as a uint8 image with one block x block tile per grid cell.

    Gray = round(255 * (v - vmin)/(vmax - vmin)); a degenerate range
    (vmax == vmin, data scaling on a constant grid) renders mid-gray.
    """
    grid, _, _ = _grid_from_aggregate(rows, metric, region)
    vmin, vmax = _scale_range(grid, metric, fixed_scale, cap_db)
    if vmax == vmin:
        gray_cells = np.full(grid.shape, 128, dtype=np.uint8)
    else:
        gray_cells = quantize_unit((grid - vmin) / (vmax - vmin))
    return np.kron(gray_cells, np.ones((block, block), dtype=np.uint8))


def snapshot(obj) -> np.ndarray:
    """Grayscale uint8 view of an SR map, density map, or region mask.

    Maps scale linearly to [0, 255] by their own maximum (all-zero maps
    render black); masks render dense white (255) on sparse black (0).
    """
    if isinstance(obj, RegionMask):
        return np.where(obj.labels, 255, 0).astype(np.uint8)
    if isinstance(obj, (SRMap, DensityMap)):
        v = obj.values
        peak = float(v.max()) if v.size else 0.0
        if peak <= 0.0:
            return np.zeros(v.shape, dtype=np.uint8)
        return quantize_unit(v / peak)
    raise TypeError(f"cannot snapshot {type(obj).__name__}")


def _rate_labels(rates: list[float]) -> list[str]:
    return [f"{100.0 * r:g}%" for r in rates]


def save_heatmap_figure(
    rows: tuple[AggregateRow, ...],
    metric: str,
    out_path,
    fixed_scale: bool = True,
    cap_db: float = DEFAULT_PSNR_CAP_DB,
) -> None:
    """One PNG per metric: sparse / dense / all panels with annotated cells."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    regions = ("sparse", "dense", "all")
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.2), constrained_layout=True)
    for ax, region in zip(axes, regions):
        grid, fp_rates, fn_rates = _grid_from_aggregate(rows, metric, region)
        vmin, vmax = _scale_range(grid, metric, fixed_scale, cap_db)
        if vmax == vmin:
            vmax = vmin + 1.0
        im = ax.imshow(grid, cmap="gray", vmin=vmin, vmax=vmax, interpolation="nearest")
        ax.set_xticks(range(len(fp_rates)), _rate_labels(fp_rates))
        ax.set_yticks(range(len(fn_rates)), _rate_labels(fn_rates))
        ax.set_xlabel("false-positive rate")
        ax.set_ylabel("false-negative rate")
        ax.set_title(f"{metric.upper()} ({region} region)")
        fmt = "{:.3f}" if metric == METRIC_SSIM else "{:.1f}"
        for (row, col), v in np.ndenumerate(grid):
            rel = 0.5 if vmax == vmin else (v - vmin) / (vmax - vmin)
            ax.text(
                col, row, fmt.format(v),
                ha="center", va="center", fontsize=7,
                color="black" if rel > 0.55 else "white",
            )
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def save_overview_figure(srmap: SRMap, density: DensityMap, mask: RegionMask, out_path) -> None:
    """Side-by-side SR map, KDE density, and dense/sparse mask panels."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    panels = (
        (snapshot(srmap), "SR map (count accumulation)"),
        (snapshot(density), "KDE density"),
        (snapshot(mask), "regions (white = dense)"),
    )
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 4.2), constrained_layout=True)
    for ax, (img, title) in zip(axes, panels):
        ax.imshow(img, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
