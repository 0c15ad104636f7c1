"""Deterministic synthetic vasculature and localization-frame generator.

Vessels are quadratic Bezier curves in three roles: a roughly parallel
family of bright trunks with branching canopies (the first trunk being a
short, very bright, canopy-free feeder that owns the accumulation peak),
and an optional faint capillary lattice threading the rest of the field
of view.  Emission decays geometrically with branching depth, so the
trunk cores come out dense while the canopy and lattice stay sparse —
the contrast the downstream density segmentation and error-sensitivity
sweep exercise.

Everything is a pure function of its seed: frame sampling derives one
sub-stream per frame (see :mod:`ulmsens.rng`), so frames can be produced
in any order, or concurrently, with byte-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, ImagingConfig, LocalizationFrame
from .rng import FRAME_SALT_SYNTH, Xoshiro256StarStar, mix_seed

# Leaf emission is clamped to at most this fraction of the trunk rate, so
# a dense core / sparse periphery contrast survives shallow trees too.
LEAF_RATE_CAP = 0.2
RATE_DECAY = 0.45

# The first trunk renders as a short, canopy-free feeder vessel whose
# accumulation peak owns the map maximum, the way a large vein saturates
# real ULM maps; everything else is budgeted relative to that peak.
FEEDER_RATE_FACTOR = 1.35
FEEDER_LENGTH_FACTOR = 0.35

# Capillary-mesh chunks emit at this fraction of the trunk rate, which
# keeps them in leaf territory (under the 1/5 cap).
MESH_RATE_FRACTION = 0.0123
MESH_LENGTH_FRACTION = 0.16

_JITTER_WAVELENGTH_FRAC = 0.05   # sigma = wavelength / 20
_MAX_JITTER_REDRAWS = 64


@dataclass(frozen=True)
class BezierSegment:
    """Quadratic Bezier vessel segment with a mean MB emission per frame."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]
    emission_rate: float
    depth: int = 0

    def __post_init__(self):
        if self.emission_rate < 0:
            raise ValueError(f"emission_rate must be >= 0, got {self.emission_rate}")

    def point_at(self, t: float) -> tuple[float, float]:
        s = 1.0 - t
        a = s * s
        b = 2.0 * s * t
        c = t * t
        return (
            a * self.p0[0] + b * self.p1[0] + c * self.p2[0],
            a * self.p0[1] + b * self.p1[1] + c * self.p2[1],
        )

    def tangent_at(self, t: float) -> tuple[float, float]:
        s = 1.0 - t
        return (
            2.0 * s * (self.p1[0] - self.p0[0]) + 2.0 * t * (self.p2[0] - self.p1[0]),
            2.0 * s * (self.p1[1] - self.p0[1]) + 2.0 * t * (self.p2[1] - self.p1[1]),
        )

    def chord_length(self) -> float:
        return math.hypot(self.p2[0] - self.p0[0], self.p2[1] - self.p0[1])


@dataclass(frozen=True)
class VesselTree:
    """Vessel segments plus the imaging geometry they were built for."""

    config: ImagingConfig
    segments: tuple[BezierSegment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        fov = self.config.fov
        for i, seg in enumerate(self.segments):
            for p in (seg.p0, seg.p1, seg.p2):
                if not fov.contains(p[0], p[1]):
                    raise ValueError(f"segment {i}: control point {p} outside FOV")


def _clamp_point(x: float, z: float, box) -> tuple[float, float]:
    return (min(max(x, box[0]), box[1]), min(max(z, box[2]), box[3]))


def _ray_box_distance(x: float, z: float, dx: float, dz: float, box) -> float:
    """Distance from (x, z) along (dx, dz) to the box boundary (0 if outside)."""
    best = math.inf
    if dx > 0:
        best = min(best, (box[1] - x) / dx)
    elif dx < 0:
        best = min(best, (box[0] - x) / dx)
    if dz > 0:
        best = min(best, (box[3] - z) / dz)
    elif dz < 0:
        best = min(best, (box[2] - z) / dz)
    return max(0.0, best if best is not math.inf else 0.0)


def _fit_ray(x: float, z: float, dx: float, dz: float, length: float, box):
    """Shrink (or flip) a ray so its endpoint stays inside the box.

    Endpoint clamping would collapse segments that start near the border
    into near-degenerate curves whose uniform-in-t sampling piles all
    emission onto a few pixels; fitting the ray keeps segment length and
    emission density in a controlled band instead.
    """
    room = _ray_box_distance(x, z, dx, dz, box)
    if room < 0.4 * length:
        flipped = _ray_box_distance(x, z, -dx, -dz, box)
        if flipped > room:
            dx, dz, room = -dx, -dz, flipped
    return dx, dz, min(length, 0.95 * room)


def generate_vessels(
    config: ImagingConfig,
    seed: int,
    n_trunk: int = 3,
    branching_depth: int = 3,
    trunk_rate: float = 18.0,
    mesh_segments: int = 0,
) -> VesselTree:
    """Grow a deterministic vessel tree inside the FOV.

    Trunks traverse the FOV as a spread, roughly parallel family; each
    segment spawns two children per depth level, rotated off the parent
    tangent and reaching outward.  Emission decays geometrically per
    level, with leaves clamped to at most a fifth of the trunk rate, so
    trunks always emit >= 5x the leaf rate whenever the tree has leaves
    below the trunks.

    ``mesh_segments`` additionally lays a capillary lattice over the FOV
    (see the net helper); real tissue is threaded by perfusion
    everywhere, and the lattice keeps the periphery textured instead of
    mathematically empty.
    """
    if n_trunk < 1:
        raise ValueError(f"n_trunk must be >= 1, got {n_trunk}")
    if branching_depth < 0:
        raise ValueError(f"branching_depth must be >= 0, got {branching_depth}")
    if trunk_rate < 0:
        raise ValueError(f"trunk_rate must be >= 0, got {trunk_rate}")
    if mesh_segments < 0:
        raise ValueError(f"mesh_segments must be >= 0, got {mesh_segments}")

    fov = config.fov
    ex, ez = fov.x_extent, fov.z_extent
    margin = 0.03 * min(ex, ez)
    box = (fov.x_min + margin, fov.x_max - margin, fov.z_min + margin, fov.z_max - margin)
    cx = 0.5 * (fov.x_min + fov.x_max)
    cz = 0.5 * (fov.z_min + fov.z_max)

    rng = Xoshiro256StarStar(seed)
    segments: list[BezierSegment] = []

    def rate_for(depth: int) -> float:
        rate = trunk_rate * (RATE_DECAY ** depth)
        if branching_depth >= 1 and depth == branching_depth:
            rate = min(rate, trunk_rate * LEAF_RATE_CAP)
        return rate

    def grow(parent: BezierSegment, depth: int, reach: float) -> None:
        segments.append(parent)
        if depth >= branching_depth:
            return
        for child_side in (1.0, -1.0):
            t0 = 0.30 + 0.55 * rng.u01()
            bx, bz = parent.point_at(t0)
            tx, tz = parent.tangent_at(t0)
            norm = math.hypot(tx, tz)
            if norm == 0.0:
                tx, tz = 1.0, 0.0
                norm = 1.0
            tx, tz = tx / norm, tz / norm
            angle = child_side * (0.5 + 0.9 * rng.u01())
            ca, sa = math.cos(angle), math.sin(angle)
            dx, dz = ca * tx - sa * tz, sa * tx + ca * tz
            length = reach * (0.55 + 0.35 * rng.u01())
            dx, dz, length = _fit_ray(bx, bz, dx, dz, length, box)
            bow = (rng.u01() - 0.5) * 0.5 * length
            # emission scales down with any boundary-shortened length so
            # per-pixel density stays in the band set by the depth level
            rate_scale = min(1.0, length / (0.725 * reach)) if reach > 0 else 1.0
            mid = (
                bx + 0.5 * length * dx - bow * dz,
                bz + 0.5 * length * dz + bow * dx,
            )
            end = (bx + length * dx, bz + length * dz)
            child = BezierSegment(
                p0=(bx, bz),
                p1=_clamp_point(*mid, box),
                p2=end,
                emission_rate=rate_for(depth + 1) * rate_scale,
                depth=depth + 1,
            )
            grow(child, depth + 1, max(length, 0.25 * reach))

    # Trunks run as a roughly parallel family spread across the FOV, the
    # way feeding vessels traverse a tissue slab.  Keeping them parallel
    # avoids trunk-on-trunk crossings, whose stacked counts would own the
    # map maximum and squash everything else after normalization.
    family_theta = 2.0 * math.pi * rng.u01()
    for trunk_index in range(n_trunk):
        offset = (trunk_index + 0.5) / n_trunk - 0.5 + 0.18 * (rng.u01() - 0.5)
        theta = family_theta + 0.17 * (rng.u01() - 0.5)
        dx, dz = math.cos(theta), math.sin(theta)
        wx = cx - offset * 0.85 * ex * dz
        wz = cz + offset * 0.85 * ez * dx
        wx = min(max(wx, box[0]), box[1])
        wz = min(max(wz, box[2]), box[3])
        half = 0.42 * min(ex, ez) * (0.85 + 0.3 * rng.u01())
        rate = rate_for(0)
        reach = 2.0 * half
        is_feeder = trunk_index == 0 and n_trunk >= 2
        if is_feeder:
            half *= FEEDER_LENGTH_FACTOR
            rate *= FEEDER_RATE_FACTOR
        half = min(
            half,
            0.95 * _ray_box_distance(wx, wz, dx, dz, box),
            0.95 * _ray_box_distance(wx, wz, -dx, -dz, box),
        )
        bow = (rng.u01() - 0.5) * 0.6 * half
        trunk = BezierSegment(
            p0=(wx - half * dx, wz - half * dz),
            p1=_clamp_point(wx - bow * dz, wz + bow * dx, box),
            p2=(wx + half * dx, wz + half * dz),
            emission_rate=rate,
            depth=0,
        )
        if is_feeder:
            # bare bright core: a canopy on its short extent would stack
            # the whole subtree onto a few pixels
            segments.append(trunk)
        else:
            grow(trunk, 0, reach)

    _grow_capillary_net(segments, rng, fov, box, margin, trunk_rate, mesh_segments,
                        mesh_depth=max(branching_depth, 1),
                        avoid=_bright_polyline(segments, 0.3 * trunk_rate),
                        avoid_radius=1.6 * config.wavelength)

    return VesselTree(config=config, segments=tuple(segments))


def _bright_polyline(segments, rate_floor: float) -> np.ndarray:
    """Sample points along segments at or above ``rate_floor`` emission."""
    pts = []
    ts = [k / 23 for k in range(24)]
    for seg in segments:
        if seg.emission_rate >= rate_floor:
            pts.extend(seg.point_at(t) for t in ts)
    return np.asarray(pts, dtype=np.float64).reshape(-1, 2)


def _grow_capillary_net(segments, rng, fov, box, margin, trunk_rate, mesh_segments, mesh_depth,
                        avoid=None, avoid_radius=0.0):
    """Lay a wiggly capillary lattice of short chained segments.

    Capillary lines alternate between near-horizontal and near-vertical
    runs at stratified positions, each built from ~6 collinear chunks
    with per-chunk heading jitter.  The lattice pitch tracks the SSIM
    window scale, so no analysis window is left without faint vascular
    texture; per-chunk emission stays far below the trunk rate.

    Chunks starting within ``avoid_radius`` of the ``avoid`` polyline are
    dropped: tissue next to large vessels is drained by them, so the
    capillary bed rarefies there.
    """
    if mesh_segments <= 0:
        return
    ex, ez = fov.x_extent, fov.z_extent
    # capillaries run right up to the FOV edge, unlike the trunk margin
    margin = 0.004 * min(ex, ez)
    box = (fov.x_min + margin, fov.x_max - margin, fov.z_min + margin, fov.z_max - margin)
    mesh_rate = trunk_rate * MESH_RATE_FRACTION
    chunk_len = MESH_LENGTH_FRACTION * min(ex, ez)
    chunks_per_line = max(1, round((min(ex, ez) - 2 * margin) / chunk_len))
    n_lines = max(2, mesh_segments // chunks_per_line)
    per_orient = (n_lines + 1) // 2

    emitted = 0
    for line in range(n_lines):
        if emitted >= mesh_segments:
            break
        horizontal = line % 2 == 0
        k = line // 2
        frac = (k + 0.25 + 0.5 * rng.u01()) / per_orient
        if horizontal:
            x, z = fov.x_min + margin, fov.z_min + margin + frac * (ez - 2 * margin)
            heading = 0.0
        else:
            x, z = fov.x_min + margin + frac * (ex - 2 * margin), fov.z_min + margin
            heading = 0.5 * math.pi
        heading += 0.22 * (rng.u01() - 0.5)
        for _ in range(chunks_per_line):
            if emitted >= mesh_segments:
                break
            wiggle = heading + 0.25 * (rng.u01() - 0.5)
            dx, dz = math.cos(wiggle), math.sin(wiggle)
            length = chunk_len * (0.85 + 0.3 * rng.u01())
            dx, dz, length = _fit_ray(x, z, dx, dz, length, box)
            if length <= 0.1 * chunk_len:
                break
            bow = (rng.u01() - 0.5) * 0.3 * length
            mid = (x + 0.5 * length * dx - bow * dz, z + 0.5 * length * dz + bow * dx)
            rate = mesh_rate * min(1.0, length / chunk_len)
            end = (x + length * dx, z + length * dz)
            keep = True
            if avoid is not None and len(avoid) and avoid_radius > 0:
                cx2, cz2 = 0.5 * (x + end[0]), 0.5 * (z + end[1])
                d2 = (avoid[:, 0] - cx2) ** 2 + (avoid[:, 1] - cz2) ** 2
                keep = d2.min() > avoid_radius * avoid_radius
            if keep:
                segments.append(
                    BezierSegment(
                        p0=(x, z),
                        p1=_clamp_point(*mid, box),
                        p2=end,
                        emission_rate=rate,
                        depth=mesh_depth,
                    )
                )
            emitted += 1
            x, z = end


def sample_frames(
    tree: VesselTree,
    n_frames: int,
    seed: int,
    jitter_sigma: float | None = None,
) -> Dataset:
    """Draw localization frames from a vessel tree.

    Per frame and segment the MB count is Poisson(emission_rate); each MB
    sits at a uniform curve parameter plus isotropic Gaussian jitter
    (default sigma = wavelength/20).  A jittered point falling outside the
    FOV is redrawn; after 64 rejections it is clamped onto the boundary.
    Each frame consumes its own seed-derived stream, so sampling order
    cannot change the result.
    """
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    config = tree.config
    fov = config.fov
    if jitter_sigma is None:
        jitter_sigma = config.wavelength * _JITTER_WAVELENGTH_FRAC

    frames = []
    for frame_index in range(n_frames):
        rng = Xoshiro256StarStar(mix_seed(seed, FRAME_SALT_SYNTH, frame_index))
        pts: list[tuple[float, float]] = []
        for seg in tree.segments:
            count = rng.poisson(seg.emission_rate)
            for _ in range(count):
                t = rng.u01()
                bx, bz = seg.point_at(t)
                x, z = bx, bz
                for _ in range(_MAX_JITTER_REDRAWS):
                    gx, gz = rng.normal_pair()
                    x = bx + jitter_sigma * gx
                    z = bz + jitter_sigma * gz
                    if fov.contains(x, z):
                        break
                else:
                    x = min(max(x, fov.x_min), fov.x_max)
                    z = min(max(z, fov.z_min), fov.z_max)
                pts.append((x, z))
        frames.append(
            LocalizationFrame(frame_index=frame_index, points=np.array(pts, dtype=np.float64))
        )
    return Dataset(config=config, frames=tuple(frames))
