import numpy as np
import pytest

from ulmsens.dataset import Dataset, Fov, ImagingConfig, LocalizationFrame
from ulmsens.errors import DataFormatError, GeometryError
from ulmsens.render import (
    SRMap,
    log_compress,
    map_total,
    normalize_pair,
    quantize_unit,
    rasterize,
    read_grid_bin,
    write_grid_bin,
    write_srmap_pgm,
)

CFG = ImagingConfig(
    center_frequency=1540.0 * 10,   # wavelength 0.1 m, pixel 0.01 m
    fov=Fov(0.0, 0.1, 0.0, 0.08),   # 10 x 8 pixels
)


def dataset_of(points, config=CFG):
    frames = (LocalizationFrame(0, np.asarray(points, dtype=float).reshape(-1, 2)),)
    return Dataset(config=config, frames=frames)


def test_single_point_single_pixel():
    m = rasterize(dataset_of([[0.055, 0.045]]))
    assert m.width == 10 and m.height == 8
    assert m.values.sum() == 1.0
    assert m.values[4, 5] == 1.0


def test_duplicate_points_accumulate():
    m = rasterize(dataset_of([[0.055, 0.045], [0.055, 0.045]]))
    assert m.values[4, 5] == 2.0


def test_max_boundary_clamps_into_last_pixel():
    m = rasterize(dataset_of([[0.1, 0.08]]))
    assert m.values[7, 9] == 1.0


def test_empty_dataset_is_zero_map():
    m = rasterize(Dataset(config=CFG, frames=()))
    assert m.values.sum() == 0.0


def test_mass_conservation_random():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(0, 500))
        pts = np.column_stack([rng.uniform(0, 0.1, n), rng.uniform(0, 0.08, n)])
        ds = dataset_of(pts) if n else Dataset(config=CFG, frames=())
        assert map_total(rasterize(ds)) == n


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    pts = np.column_stack([rng.uniform(0, 0.1, 100), rng.uniform(0, 0.08, 100)])
    a = rasterize(dataset_of(pts))
    b = rasterize(dataset_of(pts[rng.permutation(100)]))
    assert np.array_equal(a.values, b.values)


def test_frame_split_invariance():
    rng = np.random.default_rng(4)
    pts = np.column_stack([rng.uniform(0, 0.1, 60), rng.uniform(0, 0.08, 60)])
    single = rasterize(dataset_of(pts))
    split = Dataset(config=CFG, frames=(
        LocalizationFrame(0, pts[:17]),
        LocalizationFrame(1, pts[17:40]),
        LocalizationFrame(5, pts[40:]),
    ))
    assert np.array_equal(single.values, rasterize(split).values)


def test_normalize_pair_scales_by_reference_max():
    ref = rasterize(dataset_of([[0.055, 0.045]] * 4 + [[0.015, 0.015]]))
    test = rasterize(dataset_of([[0.055, 0.045]] * 6))
    rn, tn = normalize_pair(ref, test)
    assert rn.values[4, 5] == 1.0
    assert rn.values[1, 1] == 0.25
    assert tn.values[4, 5] == 1.0   # 6/4 clipped to 1


def test_normalize_pair_zero_reference():
    zero = rasterize(Dataset(config=CFG, frames=()))
    test = rasterize(dataset_of([[0.055, 0.045]]))
    rn, tn = normalize_pair(zero, test)
    assert not rn.values.any() and not tn.values.any()


def test_normalize_pair_idempotent_on_unit_reference():
    ref = rasterize(dataset_of([[0.055, 0.045], [0.015, 0.015]]))
    test = rasterize(dataset_of([[0.015, 0.015]]))
    rn, tn = normalize_pair(ref, test)
    rn2, tn2 = normalize_pair(rn, tn)
    assert np.array_equal(rn.values, rn2.values)
    assert np.array_equal(tn.values, tn2.values)


def test_normalize_pair_preserves_ratio_up_to_clipping():
    rng = np.random.default_rng(5)
    ref = rasterize(dataset_of(np.column_stack([rng.uniform(0, 0.1, 200), rng.uniform(0, 0.08, 200)])))
    test = rasterize(dataset_of(np.column_stack([rng.uniform(0, 0.1, 150), rng.uniform(0, 0.08, 150)])))
    rn, tn = normalize_pair(ref, test)
    mask = (ref.values > 0) & (test.values <= ref.values.max())
    ratio_before = test.values[mask] / ref.values[mask]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio_after = tn.values[mask] / rn.values[mask]
    assert np.allclose(ratio_before, ratio_after, rtol=1e-12)


def test_normalize_pair_geometry_mismatch():
    small = ImagingConfig(center_frequency=15400.0, fov=Fov(0.0, 0.1, 0.0, 0.05))
    with pytest.raises(GeometryError):
        normalize_pair(rasterize(Dataset(config=CFG, frames=())),
                       rasterize(Dataset(config=small, frames=())))


def test_log_compress_mapping():
    m = SRMap(width=4, height=1, pixel_size=1.0, origin=(0, 0),
              values=np.array([[1.0, 0.1, 0.01, 0.0]]))
    out = log_compress(m, floor_db=-40.0)
    assert out.values[0, 0] == 1.0
    assert out.values[0, 1] == pytest.approx(0.5)
    assert out.values[0, 2] == pytest.approx(0.0)
    assert out.values[0, 3] == 0.0


def test_quantize_unit_rounding():
    vals = np.array([0.0, 0.5, 1.0, 0.002, 0.0019])
    assert quantize_unit(vals).tolist() == [0, 128, 255, 1, 0]


def test_grid_bin_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    grid = rng.uniform(0, 7, size=(9, 13))
    path = tmp_path / "g.bin"
    write_grid_bin(path, grid)
    back = read_grid_bin(path)
    assert back.shape == (9, 13)
    assert np.array_equal(back, grid)


def test_grid_bin_layout(tmp_path):
    path = tmp_path / "g.bin"
    write_grid_bin(path, np.array([[1.0, 2.0], [3.0, 4.0]]))
    raw = path.read_bytes()
    assert raw[:8] == (2).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert np.frombuffer(raw, dtype="<f8", offset=8).tolist() == [1.0, 2.0, 3.0, 4.0]


def test_grid_bin_truncation_detected(tmp_path):
    path = tmp_path / "bad.bin"
    write_grid_bin(path, np.ones((3, 3)))
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(DataFormatError):
        read_grid_bin(path)


def test_srmap_pgm_requires_unit_range(tmp_path):
    m = rasterize(dataset_of([[0.055, 0.045]] * 3))
    with pytest.raises(ValueError):
        write_srmap_pgm(m, tmp_path / "x.pgm")
    rn, _ = normalize_pair(m, m)
    write_srmap_pgm(rn, tmp_path / "ok.pgm")
    assert (tmp_path / "ok.pgm").exists()
