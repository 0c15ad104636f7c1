"""Controlled degradation of localization frames.

False negatives remove ground-truth points; false positives append
uniformly placed spurious ones.  Both counts are fractions of the frame's
*original* point count, rounded half away from zero, so the FP and FN
axes of a sweep stay independent:

    kept     = n - round(fn_rate * n)
    appended =     round(fp_rate * n)

Each frame owns a seed-derived stream; FN draws consume it before FP
draws.  Degrading frame i never touches any other frame's state, so the
whole operation parallelizes without changing a single output bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, Fov, LocalizationFrame
from .rng import FRAME_SALT_INJECT, Xoshiro256StarStar, mix_seed


@dataclass(frozen=True)
class ErrorProfile:
    """Per-frame FP/FN rates plus the seed all injection draws flow from."""

    fp_rate: float
    fn_rate: float
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.fp_rate <= 1.0):
            raise ValueError(f"fp_rate must be in [0, 1], got {self.fp_rate}")
        if not (0.0 <= self.fn_rate <= 1.0):
            raise ValueError(f"fn_rate must be in [0, 1], got {self.fn_rate}")


def round_half_away_from_zero(x: float) -> int:
    """round(x) with ties going away from zero (0.5 -> 1), for x >= 0.

    Uses an exact fractional-part comparison rather than floor(x + 0.5),
    which can double-round near ties.
    """
    f = math.floor(x)
    return int(f) + (1 if x - f >= 0.5 else 0)


def inject_false_negatives(
    frame: LocalizationFrame, fn_rate: float, rng: Xoshiro256StarStar
) -> LocalizationFrame:
    """Remove round(fn_rate * n) points, chosen uniformly without replacement.

    Survivors keep their original order.
    """
    if not (0.0 <= fn_rate <= 1.0):
        raise ValueError(f"fn_rate must be in [0, 1], got {fn_rate}")
    n = len(frame)
    k = round_half_away_from_zero(fn_rate * n)
    if k == 0:
        return frame
    # Partial Fisher-Yates: the first k slots are the removed indices.
    idx = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        idx[i], idx[j] = idx[j], idx[i]
    removed = set(idx[:k])
    keep = np.array([i for i in range(n) if i not in removed], dtype=np.intp)
    return LocalizationFrame(frame_index=frame.frame_index, points=frame.points[keep])


def inject_false_positives(
    frame: LocalizationFrame,
    fp_rate: float,
    fov: Fov,
    rng: Xoshiro256StarStar,
    n_reference: int | None = None,
) -> LocalizationFrame:
    """Append round(fp_rate * n) points drawn uniformly over the FOV.

    ``n`` is the frame's point count unless ``n_reference`` overrides it
    (the degradation pipeline anchors it to the pre-removal count).  The
    original points are unchanged and come first in the output.
    """
    if not (0.0 <= fp_rate <= 1.0):
        raise ValueError(f"fp_rate must be in [0, 1], got {fp_rate}")
    n = len(frame) if n_reference is None else n_reference
    k = round_half_away_from_zero(fp_rate * n)
    if k == 0:
        return frame
    extra = np.empty((k, 2), dtype=np.float64)
    for i in range(k):
        extra[i, 0] = fov.x_min + rng.u01() * fov.x_extent
        extra[i, 1] = fov.z_min + rng.u01() * fov.z_extent
    points = np.concatenate([frame.points, extra], axis=0)
    return LocalizationFrame(frame_index=frame.frame_index, points=points)


def degrade_frame(frame: LocalizationFrame, profile: ErrorProfile, fov: Fov) -> LocalizationFrame:
    """FN removal then FP insertion on one frame, from its own sub-stream.

    Both counts are anchored to the frame's original size; FN draws
    consume the stream before FP draws.
    """
    rng = Xoshiro256StarStar(mix_seed(profile.seed, FRAME_SALT_INJECT, frame.frame_index))
    n_original = len(frame)
    out = inject_false_negatives(frame, profile.fn_rate, rng)
    return inject_false_positives(out, profile.fp_rate, fov, rng, n_reference=n_original)


def apply_error_profile(dataset: Dataset, profile: ErrorProfile) -> Dataset:
    """Degrade every frame of a dataset; pure and order-independent."""
    fov = dataset.config.fov
    frames = tuple(degrade_frame(f, profile, fov) for f in dataset.frames)
    return Dataset(config=dataset.config, frames=frames)
