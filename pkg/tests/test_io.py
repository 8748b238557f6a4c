import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from invsource import io as fio
from invsource.errors import DimensionMismatch, InvalidParameter
from invsource.forward import ElasticParams, EMParams, apply_noise, synthesize_dataset
from invsource.geometry import cartesian_grid, fibonacci_sphere, frequency_grid, plane_slice, theta_circle
from invsource.indicators import IndicatorField, indicator_E, indicator_f_2d
from invsource.sources import bump_source, example_two


def test_defaults_cover_standard_settings():
    e = fio.default_config("elastic2d")
    assert (e.lam, e.mu, e.delta, e.noise, e.lo, e.hi, e.h) == (1.0, 1.0, 0.5, 0.3, (-3.0, -3.0), (3.0, 3.0), 0.01)
    m = fio.default_config("em3d")
    assert (m.noise, m.delta, m.lo, m.hi, m.h) == (0.1, 0.5, (-1.0,) * 3, (1.0,) * 3, 0.01)
    assert len(m.grids()) == 6


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nproblem = elastic2d\nphysics.lambda = 2.0\ndata.L = 31\n"
                 "indicators = f2d, p2d\ngrid.lo = -2, -2\ngrid.hi = [2, 2]\n")
    cfg = fio.load_config(p, fio.parse_overrides(["data.L=41", "metrics.real_part_only=true"]))
    assert cfg.lam == 2.0 and cfg.L == 41 and cfg.real_part_only
    assert cfg.indicators == ("f2d", "p2d") and cfg.lo == (-2.0, -2.0) and cfg.hi == (2.0, 2.0)
    again = fio.config_from_flat(cfg.to_flat())
    assert again == cfg


def test_slice_list_forms():
    a = fio.config_from_flat({"problem": "em3d", "grid.slices": "2:0.25, 0:-0.25"})
    b = fio.config_from_flat({"problem": "em3d", "grid.slices": [[2, 0.25], [0, -0.25]]})
    assert a.slices == b.slices == ((2, 0.25), (0, -0.25))


def test_config_errors(tmp_path):
    with pytest.raises(InvalidParameter):
        fio.load_config(None, {"data.L": "abc"})
    with pytest.raises(InvalidParameter):
        fio.load_config(None, {"bogus.key": "1"})
    with pytest.raises(DimensionMismatch):
        fio.load_config(None, {"indicators": "E"})
    with pytest.raises(DimensionMismatch):
        fio.load_config(None, {"problem": "em3d", "source.name": "example_two", "indicators": "E"})
    with pytest.raises(InvalidParameter):
        fio.parse_overrides(["novalue"])


def test_output_dir_override(monkeypatch):
    cfg = fio.default_config()
    monkeypatch.delenv(fio.OUTPUT_DIR_ENV, raising=False)
    assert str(fio.output_dir(cfg)) == "out"
    monkeypatch.setenv(fio.OUTPUT_DIR_ENV, "/tmp/elsewhere")
    assert str(fio.output_dir(cfg)) == "/tmp/elsewhere"
    assert str(fio.output_dir(cfg, "x")) == "x"


@pytest.mark.parametrize("kind", ["elastic2d", "em3d"])
def test_dataset_round_trip(tmp_path, kind):
    if kind == "elastic2d":
        ds = synthesize_dataset(example_two(), ElasticParams(0.7, 1.1), theta_circle(7), frequency_grid(0.5, 5))
    else:
        ds = synthesize_dataset(bump_source((0.0, 0.0, 0.0), 0.5), EMParams(1.3, 0.9), fibonacci_sphere(6),
                                frequency_grid(0.25, 4))
    ds = apply_noise(ds, 0.3, 11)
    path = fio.write_dataset(tmp_path / "d.csv", ds, fio.default_config())
    back = fio.read_dataset(path)
    assert back == ds
    for name in ds.block_names:
        assert back.blocks[name].tobytes() == ds.blocks[name].tobytes()
    header, _ = fio.read_header(path)
    assert header["schema"] == fio.SCHEMA_DATASET and header["seed"] == 11 and "config.data.L" in header


def test_dataset_bytes_deterministic(tmp_path):
    ds = synthesize_dataset(example_two(), ElasticParams(), theta_circle(5), frequency_grid(0.5, 3))
    a = fio.write_dataset(tmp_path / "a.csv", ds).read_bytes()
    b = fio.write_dataset(tmp_path / "b.csv", ds).read_bytes()
    assert a == b


def test_field_round_trip(tmp_path):
    ds = apply_noise(synthesize_dataset(example_two(), ElasticParams(), theta_circle(9), frequency_grid(0.5, 6)), 0.3, 1)
    f = indicator_f_2d(ds, cartesian_grid(([-1, -1], [1, 1]), 0.1))
    back = fio.read_field(fio.write_field(tmp_path / "f.csv", f))
    assert back.kind == f.kind and back.grid == f.grid
    assert back.values.tobytes() == f.values.tobytes()
    ds3 = synthesize_dataset(bump_source((0.0, 0.0, 0.0), 0.5), EMParams(), fibonacci_sphere(6), frequency_grid(0.5, 3))
    g = indicator_E(ds3, plane_slice(([-1] * 3, [1] * 3), 1, 0.25, 0.2))
    back = fio.read_field(fio.write_field(tmp_path / "g.csv", g))
    assert back.grid == g.grid and back.values.tobytes() == g.values.tobytes()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=True, width=64), min_size=4, max_size=4))
def test_field_round_trip_any_floats(tmp_path_factory, vals):
    grid = cartesian_grid(([0, 0], [1, 1]), 1.0)
    v = np.array(vals, dtype=float).reshape(2, 2, 1) * (1 - 2j)
    f = IndicatorField(grid, v, "p2d")
    path = tmp_path_factory.mktemp("h") / "f.csv"
    back = fio.read_field(fio.write_field(path, f))
    assert back.values.tobytes() == f.values.tobytes()


def test_scalar_grid_round_trip(tmp_path, rng):
    grid = cartesian_grid(([-1, -1], [1, 2]), 0.25)
    v = rng.normal(size=grid.shape) * 1e-7
    g2, back, _ = fio.read_scalar_grid(fio.write_scalar_grid(tmp_path / "s.csv", grid, v))
    assert g2 == grid and back.tobytes() == v.tobytes()


def test_pgm(tmp_path):
    v = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    path, side = fio.write_pgm(tmp_path / "a.pgm", v)
    img = fio.read_pgm(path)
    assert img.shape == (3, 2)
    assert img[-1, 0] == 0 and img[0, 1] == 65535
    assert "degenerate_range: false" in side.read_text()
    path, side = fio.write_pgm(tmp_path / "c.pgm", np.full((4, 5), 7.0))
    assert np.all(fio.read_pgm(path) == 0)
    assert "degenerate_range: true" in side.read_text()


def test_atomic_write_leaves_no_temp(tmp_path):
    fio.atomic_write_text(tmp_path / "x.txt", "hello")
    assert os.listdir(tmp_path) == ["x.txt"]


def test_append_report(tmp_path):
    p = tmp_path / "m.csv"
    fio.append_report(p, {"a": 1.5, "b": "x"})
    fio.append_report(p, {"a": 0.1, "c": 3})
    lines = p.read_text().splitlines()
    assert lines[0] == "a,b,c" and lines[2] == "0.1,,3"
