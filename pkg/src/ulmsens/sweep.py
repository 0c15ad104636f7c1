"""Error-rate sweep: degrade, render, and score every (fp, fn) grid cell.

The region mask and the reference map are computed once from the
unmodified ground-truth dataset and shared across all cells, so the
per-region metrics stay comparable over the whole grid.  Each cell owns
a seed mixed from its *indices* (not its rates), which means extending
the grid never changes the draws of existing cells.  Cells are
independent jobs: a worker pool may run them in any order and the
assembled result is byte-identical to sequential execution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import mean as _mean

import math

from .dataset import Dataset
from .density import RegionMask, mask_for_map
from .errors import UlmsensError
from .inject import ErrorProfile, apply_error_profile
from .metrics import (
    DEFAULT_PSNR_CAP_DB,
    REGION_ALL,
    REGION_DENSE,
    REGION_LABELS,
    REGION_SPARSE,
    SsimParams,
    masked_mean,
    psnr_masked,
    ssim_map,
)
from .render import SRMap, log_compress, normalize_pair, rasterize
from .rng import MASK64, splitmix64

# Index-mixing multipliers for per-cell seeds (FNV-style primes).
_FP_INDEX_MIX = 0x100000001B3
_FN_INDEX_MIX = 0x1000193

RESULT_CSV_HEADER = "fp_rate,fn_rate,rep,region,ssim,psnr"
AGGREGATE_CSV_HEADER = "fp_rate,fn_rate,region,ssim_mean,ssim_std,psnr_mean,psnr_std"

DEFAULT_RATES = (0.0, 0.05, 0.10, 0.15, 0.20)


@dataclass(frozen=True)
class SweepSpec:
    """FP/FN rate grid, repetition count, and the master seed."""

    fp_rates: tuple[float, ...] = DEFAULT_RATES
    fn_rates: tuple[float, ...] = DEFAULT_RATES
    repetitions: int = 3
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "fp_rates", tuple(float(r) for r in self.fp_rates))
        object.__setattr__(self, "fn_rates", tuple(float(r) for r in self.fn_rates))
        for name, rates in (("fp_rates", self.fp_rates), ("fn_rates", self.fn_rates)):
            if not rates:
                raise ValueError(f"{name} must be non-empty")
            if any(not (0.0 <= r <= 1.0) for r in rates):
                raise ValueError(f"{name} must lie in [0, 1], got {rates}")
            if any(b <= a for a, b in zip(rates, rates[1:])):
                raise ValueError(f"{name} must be strictly ascending, got {rates}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")

    def cell_seed(self, fp_index: int, fn_index: int, rep: int) -> int:
        mixed = (fp_index * _FP_INDEX_MIX + fn_index * _FN_INDEX_MIX + rep + 1) & MASK64
        return splitmix64((self.master_seed ^ mixed) & MASK64)


@dataclass(frozen=True)
class SweepRow:
    fp_rate: float
    fn_rate: float
    rep: int
    region: str
    ssim: float
    psnr: float


@dataclass(frozen=True)
class AggregateRow:
    fp_rate: float
    fn_rate: float
    region: str
    ssim_mean: float
    ssim_std: float
    psnr_mean: float
    psnr_std: float


@dataclass(frozen=True)
class SweepResult:
    """All per-cell rows in canonical order plus a config snapshot."""

    spec: SweepSpec
    rows: tuple[SweepRow, ...]
    config_snapshot: dict = field(default_factory=dict)

    def row_lookup(self) -> dict[tuple[float, float, int, str], SweepRow]:
        return {(r.fp_rate, r.fn_rate, r.rep, r.region): r for r in self.rows}


def _cell_metrics(
    dataset: Dataset,
    reference: SRMap,
    dense,
    sparse,
    profile: ErrorProfile,
    ssim_params: SsimParams,
    peak: float,
    cap_db: float,
    compress: bool,
) -> dict[str, tuple[float, float]]:
    degraded = apply_error_profile(dataset, profile)
    test = rasterize(degraded)
    ref_n, test_n = normalize_pair(reference, test)
    if compress:
        ref_n, test_n = log_compress(ref_n), log_compress(test_n)
    smap = ssim_map(ref_n, test_n, ssim_params)
    out = {}
    for region, mask in ((REGION_ALL, None), (REGION_DENSE, dense), (REGION_SPARSE, sparse)):
        out[region] = (
            masked_mean(smap, mask),
            psnr_masked(ref_n, test_n, mask, peak=peak, cap_db=cap_db),
        )
    return out


def run_sweep(
    dataset: Dataset,
    spec: SweepSpec,
    mask: RegionMask,
    reference: SRMap,
    ssim_params: SsimParams | None = None,
    peak: float = 1.0,
    cap_db: float = DEFAULT_PSNR_CAP_DB,
    threads: int = 1,
    compress: bool = False,
    config_snapshot: dict | None = None,
) -> SweepResult:
    """Score every (fp, fn, repetition) cell against the shared reference.

    ``mask`` and ``reference`` must come from the same unmodified dataset;
    errors inside a cell are re-raised with the cell coordinates attached.
    """
    ssim_params = ssim_params or SsimParams()
    dense = mask_for_map(mask, reference)
    sparse = ~dense
    cells = [
        (i, j, r)
        for i in range(len(spec.fp_rates))
        for j in range(len(spec.fn_rates))
        for r in range(spec.repetitions)
    ]

    def compute(cell: tuple[int, int, int]):
        i, j, r = cell
        profile = ErrorProfile(
            fp_rate=spec.fp_rates[i], fn_rate=spec.fn_rates[j], seed=spec.cell_seed(i, j, r)
        )
        try:
            return _cell_metrics(
                dataset, reference, dense, sparse, profile,
                ssim_params, peak, cap_db, compress,
            )
        except Exception as e:
            raise UlmsensError(
                f"sweep cell fp={spec.fp_rates[i]} fn={spec.fn_rates[j]} rep={r}: {e}"
            ) from e

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_cell = dict(zip(cells, pool.map(compute, cells)))
    else:
        per_cell = {cell: compute(cell) for cell in cells}

    rows = []
    for i, j, r in cells:
        metrics = per_cell[(i, j, r)]
        for region in REGION_LABELS:
            ssim, psnr = metrics[region]
            rows.append(
                SweepRow(
                    fp_rate=spec.fp_rates[i],
                    fn_rate=spec.fn_rates[j],
                    rep=r,
                    region=region,
                    ssim=ssim,
                    psnr=psnr,
                )
            )
    return SweepResult(spec=spec, rows=tuple(rows), config_snapshot=dict(config_snapshot or {}))


def aggregate(result: SweepResult) -> tuple[AggregateRow, ...]:
    """Per-cell, per-region mean and sample standard deviation over reps."""
    spec = result.spec
    lookup = result.row_lookup()
    out = []
    for fp in spec.fp_rates:
        for fn in spec.fn_rates:
            for region in REGION_LABELS:
                ssims = [lookup[(fp, fn, r, region)].ssim for r in range(spec.repetitions)]
                psnrs = [lookup[(fp, fn, r, region)].psnr for r in range(spec.repetitions)]
                out.append(
                    AggregateRow(
                        fp_rate=fp,
                        fn_rate=fn,
                        region=region,
                        ssim_mean=_mean(ssims),
                        ssim_std=_sample_std(ssims),
                        psnr_mean=_mean(psnrs),
                        psnr_std=_sample_std(psnrs),
                    )
                )
    return tuple(out)


def _sample_std(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))


def result_csv_text(result: SweepResult) -> str:
    lines = [RESULT_CSV_HEADER]
    for r in result.rows:
        lines.append(
            f"{r.fp_rate:.4f},{r.fn_rate:.4f},{r.rep},{r.region},{r.ssim:.9g},{r.psnr:.9g}"
        )
    return "\n".join(lines) + "\n"


def aggregate_csv_text(rows: tuple[AggregateRow, ...]) -> str:
    lines = [AGGREGATE_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.fp_rate:.4f},{r.fn_rate:.4f},{r.region},"
            f"{r.ssim_mean:.9g},{r.ssim_std:.9g},{r.psnr_mean:.9g},{r.psnr_std:.9g}"
        )
    return "\n".join(lines) + "\n"
