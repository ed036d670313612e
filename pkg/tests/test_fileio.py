import numpy as np
import pytest
from numpy.testing import assert_allclose

from elastishape.errors import ParseError
from elastishape.fileio import (
    export_obj,
    load_model,
    load_surface,
    read_matrix_csv,
    save_model,
    save_surface,
    write_matrix_csv,
)
from elastishape.grids import make_grid
from elastishape.shape_stats import ShapeModel
from elastishape.synthetic import gen_surface


@pytest.fixture
def surface(grid16):
    return gen_surface("bumpy-sphere", grid16, amplitude=0.2, degree=2, seed=5)


def test_surface_json_round_trip(surface, tmp_path):
    path = tmp_path / "f.json"
    save_surface(surface, path)
    loaded = load_surface(path)
    assert loaded.grid.same_dims(surface.grid)
    assert_allclose(loaded.points, surface.points, atol=1e-15)


def test_surface_binary_round_trip_is_exact(surface, tmp_path):
    path = tmp_path / "f.surf"
    save_surface(surface, path)
    loaded = load_surface(path)
    assert np.array_equal(loaded.points, surface.points)


def test_format_sniffing_ignores_extension(surface, tmp_path):
    path = tmp_path / "noext"
    save_surface(surface, path, binary=True)
    assert np.array_equal(load_surface(path).points, surface.points)
    save_surface(surface, path, binary=False)
    assert_allclose(load_surface(path).points, surface.points, atol=1e-15)


def test_missing_field_names_the_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n_v": 16, "points": []}')
    with pytest.raises(ParseError, match="n_u"):
        load_surface(path)


def test_wrong_point_count_names_the_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n_u": 16, "n_v": 16, "points": [1.0, 2.0]}')
    with pytest.raises(ParseError, match="points"):
        load_surface(path)


def test_invalid_json_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_surface(path)


def test_truncated_binary_is_a_parse_error(surface, tmp_path):
    path = tmp_path / "f.surf"
    save_surface(surface, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 9])
    with pytest.raises(ParseError):
        load_surface(path)


def test_model_round_trip(surface, tmp_path):
    rng = np.random.default_rng(3)
    k, dim = 4, surface.points.size
    directions = np.linalg.qr(rng.standard_normal((dim, k)))[0].T
    model = ShapeModel(
        mean=surface,
        directions=directions,
        singulars=np.array([2.0, 1.0, 0.5, 0.1]),
        n_train=9,
    )
    path = tmp_path / "m.eshm"
    save_model(model, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.mean.points, model.mean.points)
    assert np.array_equal(loaded.directions, model.directions)
    assert np.array_equal(loaded.singulars, model.singulars)
    assert loaded.n_train == 9


def test_obj_export_counts(tmp_path):
    grid = make_grid(8, 8)
    f = gen_surface("sphere", grid)
    path = tmp_path / "f.obj"
    export_obj(f, path)
    lines = path.read_text().splitlines()
    v_lines = [l for l in lines if l.startswith("v ")]
    f_lines = [l for l in lines if l.startswith("f ")]
    assert len(v_lines) == 64
    # two triangles per quad with azimuthal wrap, plus a fan per pole ring
    assert len(f_lines) == 2 * 8 * (8 - 1) + 2 * (8 - 2)
    for line in f_lines:
        ids = [int(tok) for tok in line.split()[1:]]
        assert len(ids) == 3
        assert all(1 <= i <= 64 for i in ids)


def test_matrix_csv_round_trip(tmp_path):
    path = tmp_path / "m.csv"
    mat = np.arange(12.0).reshape(3, 4) / 7.0
    write_matrix_csv(path, mat, ["a", "b", "c", "d"])
    header, back = read_matrix_csv(path)
    assert header == ["a", "b", "c", "d"]
    assert_allclose(back, mat, atol=1e-15)
