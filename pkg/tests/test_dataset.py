import math

import numpy as np
import pytest

from ulmsens.dataset import (
    Dataset,
    Fov,
    ImagingConfig,
    LocalizationFrame,
    imaging_config_from_dict,
    imaging_config_to_dict,
    load_csv,
    save_csv,
    wavelength,
)
from ulmsens.errors import ConfigError, DataFormatError


def small_config(**kw):
    defaults = dict(
        center_frequency=7.24e6,
        fov=Fov(x_min=0.0, x_max=0.02, z_min=0.0, z_max=0.03),
    )
    defaults.update(kw)
    return ImagingConfig(**defaults)


def test_wavelength_simulation_frequencies():
    # lambda = c / f, checked by hand for both simulation frequencies
    cfg = small_config(center_frequency=2.841e6)
    assert wavelength(cfg) == pytest.approx(5.42062654e-4, rel=1e-9)
    cfg = small_config(center_frequency=7.24e6)
    assert wavelength(cfg) == pytest.approx(2.1270718232e-4, rel=1e-9)


def test_wavelength_unit_ratio():
    cfg = small_config(center_frequency=1540.0)
    assert cfg.wavelength == 1.0


def test_pixel_size_is_exact_ratio():
    cfg = small_config()
    assert cfg.pixel_size == cfg.wavelength / 10


def test_grid_dims_deterministic_and_positive():
    cfg = small_config()
    assert cfg.grid_width == math.ceil(0.02 / cfg.pixel_size)
    assert cfg.grid_height == math.ceil(0.03 / cfg.pixel_size)
    assert cfg.grid_shape == (cfg.grid_height, cfg.grid_width)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(center_frequency=0.0)
    with pytest.raises(ValueError):
        small_config(sound_speed=-1.0)
    with pytest.raises(ValueError):
        Fov(x_min=1.0, x_max=1.0, z_min=0.0, z_max=1.0)
    with pytest.raises(ValueError):
        small_config(sr_pixels_per_wavelength=0)


def test_frame_rejects_bad_shape():
    with pytest.raises(ValueError):
        LocalizationFrame(frame_index=0, points=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        LocalizationFrame(frame_index=-1, points=np.zeros((0, 2)))


def test_dataset_validates_fov_and_ordering():
    cfg = small_config()
    inside = LocalizationFrame(0, np.array([[0.01, 0.01]]))
    outside = LocalizationFrame(1, np.array([[0.05, 0.01]]))
    with pytest.raises(ValueError, match="frame 1"):
        Dataset(config=cfg, frames=(inside, outside))
    with pytest.raises(ValueError, match="ascending"):
        Dataset(config=cfg, frames=(LocalizationFrame(2), LocalizationFrame(1)))


def test_dataset_boundary_points_are_valid():
    cfg = small_config()
    frame = LocalizationFrame(0, np.array([[0.02, 0.03], [0.0, 0.0]]))
    ds = Dataset(config=cfg, frames=(frame,))
    assert ds.total_points == 2


def test_points_are_immutable():
    frame = LocalizationFrame(0, np.array([[0.01, 0.01]]))
    with pytest.raises(ValueError):
        frame.points[0, 0] = 5.0


def test_load_csv_groups_by_frame(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("frame,x,z\n0,0.001,0.010\n0,0.002,0.011\n1,0.001,0.012\n")
    ds = load_csv(path, small_config())
    assert [len(f) for f in ds.frames] == [2, 1]
    assert [f.frame_index for f in ds.frames] == [0, 1]
    assert ds.frames[0].points[1].tolist() == [0.002, 0.011]


def test_load_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("frame,x,z\n")
    ds = load_csv(path, small_config())
    assert ds.frames == ()
    assert ds.total_points == 0


def test_load_csv_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("frame,x,z\n0,abc,0.1\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_csv(path, small_config())


def test_load_csv_rejects_bad_header_and_fields(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("x,z\n")
    with pytest.raises(DataFormatError, match="line 1"):
        load_csv(path, small_config())
    path.write_text("frame,x,z\n-1,0.001,0.001\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_csv(path, small_config())
    path.write_text("frame,x,z\n0,0.001\n")
    with pytest.raises(DataFormatError, match="3 fields"):
        load_csv(path, small_config())


def test_load_csv_fov_violation_names_frame(tmp_path):
    path = tmp_path / "out.csv"
    path.write_text("frame,x,z\n3,0.05,0.001\n")
    with pytest.raises(ValueError, match="frame 3"):
        load_csv(path, small_config())


def test_csv_round_trip_exact(tmp_path):
    cfg = small_config()
    rng = np.random.default_rng(42)
    frames = []
    for idx in range(5):
        pts = np.column_stack([
            rng.uniform(0.0, 0.02, size=7),
            rng.uniform(0.0, 0.03, size=7),
        ])
        frames.append(LocalizationFrame(idx, pts))
    ds = Dataset(config=cfg, frames=tuple(frames))
    path = tmp_path / "rt.csv"
    save_csv(ds, path)
    loaded = load_csv(path, cfg)
    assert len(loaded.frames) == len(ds.frames)
    for a, b in zip(ds.frames, loaded.frames):
        assert a.frame_index == b.frame_index
        assert np.array_equal(a.points, b.points)


def test_csv_round_trip_awkward_doubles(tmp_path):
    cfg = small_config()
    awkward = [0.01, 1.0 / 3.0 * 1e-2, math.nextafter(0.02, 0.0), 5.4206e-4, 1.2345678901234567e-2]
    pts = np.array([[v, v * 1.3] for v in awkward])
    ds = Dataset(config=cfg, frames=(LocalizationFrame(0, pts),))
    path = tmp_path / "awk.csv"
    save_csv(ds, path)
    loaded = load_csv(path, cfg)
    assert np.array_equal(loaded.frames[0].points, pts)


def test_csv_reserialization_is_byte_identical(tmp_path):
    cfg = small_config()
    rng = np.random.default_rng(7)
    pts = np.column_stack([rng.uniform(0, 0.02, 20), rng.uniform(0, 0.03, 20)])
    ds = Dataset(config=cfg, frames=(LocalizationFrame(0, pts),))
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    save_csv(ds, first)
    save_csv(load_csv(first, cfg), second)
    assert first.read_bytes() == second.read_bytes()


def test_save_csv_header_only_for_empty_dataset(tmp_path):
    ds = Dataset(config=small_config(), frames=())
    path = tmp_path / "e.csv"
    save_csv(ds, path)
    assert path.read_text() == "frame,x,z\n"


def test_imaging_config_json_round_trip():
    cfg = small_config(sound_speed=1500.0, sr_pixels_per_wavelength=8)
    doc = imaging_config_to_dict(cfg)
    assert imaging_config_from_dict(doc) == cfg


def test_imaging_config_rejects_unknown_keys():
    doc = imaging_config_to_dict(small_config())
    doc["bogus"] = 1
    with pytest.raises(ConfigError, match="bogus"):
        imaging_config_from_dict(doc)


def test_imaging_config_requires_fov():
    with pytest.raises(ConfigError):
        imaging_config_from_dict({"center_frequency_hz": 1e6})
