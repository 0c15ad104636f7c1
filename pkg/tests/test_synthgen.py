import numpy as np
import pytest

from ulmsens.config import default_imaging_config, default_run_config
from ulmsens.density import kde_density, mask_coverage, threshold_mask
from ulmsens.render import rasterize
from ulmsens.synthgen import BezierSegment, generate_vessels, sample_frames

CFG = default_imaging_config()


def test_generate_is_deterministic():
    a = generate_vessels(CFG, seed=1, n_trunk=2, branching_depth=2)
    b = generate_vessels(CFG, seed=1, n_trunk=2, branching_depth=2)
    assert a == b
    c = generate_vessels(CFG, seed=2, n_trunk=2, branching_depth=2)
    assert a != c


def test_depth_zero_gives_exactly_n_trunk_segments():
    tree = generate_vessels(CFG, seed=1, n_trunk=4, branching_depth=0)
    assert len(tree.segments) == 4


def test_segment_count_full_binary_canopy():
    tree = generate_vessels(CFG, seed=3, n_trunk=1, branching_depth=3)
    assert len(tree.segments) == 2**4 - 1    # single trunk, no feeder


def test_control_points_inside_fov():
    tree = generate_vessels(CFG, seed=5, n_trunk=3, branching_depth=3, mesh_segments=200)
    fov = CFG.fov
    for seg in tree.segments:
        for pt in (seg.p0, seg.p1, seg.p2):
            assert fov.contains(*pt)


def test_trunk_rate_at_least_5x_leaf_rate():
    for seed in (1, 9, 33):
        tree = generate_vessels(CFG, seed=seed, n_trunk=3, branching_depth=3,
                                trunk_rate=20.0, mesh_segments=150)
        trunk = min(s.emission_rate for s in tree.segments if s.depth == 0)
        leaf = max(s.emission_rate for s in tree.segments if s.depth == 3)
        assert trunk >= 5.0 * leaf


def test_bezier_evaluation():
    seg = BezierSegment(p0=(0.0, 0.0), p1=(0.5, 1.0), p2=(1.0, 0.0), emission_rate=1.0)
    assert seg.point_at(0.0) == (0.0, 0.0)
    assert seg.point_at(1.0) == (1.0, 0.0)
    assert seg.point_at(0.5) == (0.5, 0.5)
    assert seg.chord_length() == 1.0


def test_sample_frames_zero_rates_empty():
    tree = generate_vessels(CFG, seed=1, n_trunk=2, branching_depth=1, trunk_rate=0.0)
    ds = sample_frames(tree, 5, seed=1)
    assert ds.total_points == 0
    assert len(ds.frames) == 5


def test_sample_frames_deterministic():
    tree = generate_vessels(CFG, seed=2, n_trunk=2, branching_depth=1, trunk_rate=5.0)
    a = sample_frames(tree, 10, seed=77)
    b = sample_frames(tree, 10, seed=77)
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa.points, fb.points)


def test_sample_frames_poisson_mean():
    # single straight segment at rate 10 over 1000 frames: the mean
    # per-frame count estimator has sigma ~ 0.1, so [9, 11] is ~10 sigma
    from ulmsens.synthgen import VesselTree
    fov = CFG.fov
    seg = BezierSegment(
        p0=(fov.x_min + 0.2 * fov.x_extent, 0.5 * (fov.z_min + fov.z_max)),
        p1=(fov.x_min + 0.5 * fov.x_extent, 0.5 * (fov.z_min + fov.z_max)),
        p2=(fov.x_min + 0.8 * fov.x_extent, 0.5 * (fov.z_min + fov.z_max)),
        emission_rate=10.0,
    )
    tree = VesselTree(config=CFG, segments=(seg,))
    ds = sample_frames(tree, 1000, seed=4)
    mean = ds.total_points / 1000
    assert 9.0 <= mean <= 11.0


def test_all_samples_inside_fov():
    tree = generate_vessels(CFG, seed=6, n_trunk=2, branching_depth=2, mesh_segments=100)
    ds = sample_frames(tree, 20, seed=6)
    fov = CFG.fov
    pts = ds.all_points()
    assert ((pts[:, 0] >= fov.x_min) & (pts[:, 0] <= fov.x_max)).all()
    assert ((pts[:, 1] >= fov.z_min) & (pts[:, 1] <= fov.z_max)).all()


def test_frame_order_does_not_matter():
    # each frame derives its own stream, so sampling a prefix reproduces it
    tree = generate_vessels(CFG, seed=8, n_trunk=2, branching_depth=1, trunk_rate=4.0)
    long = sample_frames(tree, 8, seed=5)
    short = sample_frames(tree, 3, seed=5)
    for fa, fb in zip(short.frames, long.frames[:3]):
        assert np.array_equal(fa.points, fb.points)


def test_parameter_validation():
    with pytest.raises(ValueError):
        generate_vessels(CFG, seed=1, n_trunk=0)
    with pytest.raises(ValueError):
        generate_vessels(CFG, seed=1, n_trunk=1, branching_depth=-1)
    with pytest.raises(ValueError):
        generate_vessels(CFG, seed=1, n_trunk=1, trunk_rate=-2.0)
    with pytest.raises(ValueError):
        generate_vessels(CFG, seed=1, n_trunk=1, mesh_segments=-5)
    tree = generate_vessels(CFG, seed=1, n_trunk=1, branching_depth=0)
    with pytest.raises(ValueError):
        sample_frames(tree, 0, seed=1)


def test_function_default_fixture_mask_and_contrast():
    # function-default tree (no mesh): dense mask from the default density
    # settings covers 5-60% of pixels and the dense/sparse per-pixel count
    # contrast is at least 3x (recorded as a regression fixture)
    tree = generate_vessels(CFG, seed=1)
    ds = sample_frames(tree, 60, seed=1)
    srmap = rasterize(ds)
    density = kde_density(ds, 1.0 * CFG.wavelength)
    mask = threshold_mask(density, 0.75)
    coverage = mask_coverage(mask)
    assert 0.05 <= coverage <= 0.60
    dense_mean = srmap.values[mask.labels].mean()
    sparse_mean = srmap.values[~mask.labels].mean()
    assert dense_mean >= 3.0 * sparse_mean


def test_default_config_fixture_contrast():
    cfg = default_run_config()
    tree = generate_vessels(cfg.imaging, seed=cfg.synth.seed, n_trunk=cfg.synth.n_trunk,
                            branching_depth=cfg.synth.branching_depth,
                            trunk_rate=cfg.synth.trunk_rate,
                            mesh_segments=cfg.synth.mesh_segments)
    ds = sample_frames(tree, 40, seed=cfg.synth.seed)
    srmap = rasterize(ds)
    density = kde_density(ds, cfg.kde_bandwidth)
    mask = threshold_mask(density, cfg.kde.quantile)
    dense_mean = srmap.values[mask.labels].mean()
    sparse_mean = srmap.values[~mask.labels].mean()
    assert dense_mean >= 3.0 * sparse_mean
