"""On-disk formats: model JSON, history CSV, grid CSV."""
import json

import numpy as np
import pytest

from consol2d.files import (
    FileFormatError,
    problem_from_dict,
    problem_to_dict,
    read_grid,
    read_history,
    read_model,
    write_grid,
    write_history,
    write_model,
)
from consol2d.network import InputScaling, SurrogateModel, init_glorot
from consol2d.oracles import FieldGrid
from consol2d.problem import (
    ConsolidationProblem,
    make_double_drained,
    make_top_drained,
)
from consol2d.training import HistoryRecord


def sample_model(problem, seed=0, scaling=None):
    params = init_glorot([3, 8, 8, 1], np.random.default_rng(seed))
    return SurrogateModel(params, scaling or InputScaling())


def test_model_round_trip_is_bit_exact(tmp_path):
    problem = make_top_drained(1.0, 1.0, 0.01, 5.0, 1.0)
    scaling = InputScaling.to_unit(problem.geometry, problem.time)
    model = sample_model(problem, scaling=scaling)
    path = tmp_path / "model.json"
    write_model(path, model, problem)
    got_model, got_problem = read_model(path)
    assert got_problem == problem
    assert got_model.params.layer_sizes == model.params.layer_sizes
    assert np.array_equal(got_model.params.to_vector(), model.params.to_vector())
    assert got_model.scaling == model.scaling
    x, z, t = 0.3, 0.4, 0.5
    assert got_model.predict(x, z, t) == model.predict(x, z, t)


def test_model_round_trip_keeps_anisotropic_coefficients(tmp_path):
    problem = ConsolidationProblem(
        make_double_drained(1.0, 1.0, 0.01, 5.0, 1.0).geometry,
        make_double_drained(1.0, 1.0, 0.01, 5.0, 1.0).time,
        (0.01, 0.04),
        5.0,
        make_double_drained(1.0, 1.0, 0.01, 5.0, 1.0).conditions,
    )
    path = tmp_path / "model.json"
    write_model(path, sample_model(problem), problem)
    _, got = read_model(path)
    assert got.c_xz() == (0.01, 0.04)


def test_problem_dict_round_trip():
    for problem in (
        make_top_drained(1.0, 1.0, 0.01, 5.0, 1.0),
        make_double_drained(2.0, 3.0, (0.1, 0.2), 7.0, 10.0, lateral_drained=False),
    ):
        assert problem_from_dict(problem_to_dict(problem)) == problem


def test_model_reader_rejects_malformed_files(tmp_path):
    problem = make_top_drained(1.0, 1.0, 0.01, 5.0, 1.0)
    path = tmp_path / "model.json"
    write_model(path, sample_model(problem), problem)
    good = json.loads(path.read_text())

    bad_schema = dict(good, schema="something-else")
    (tmp_path / "a.json").write_text(json.dumps(bad_schema))
    with pytest.raises(FileFormatError):
        read_model(tmp_path / "a.json")

    missing = {k: v for k, v in good.items() if k != "parameters"}
    (tmp_path / "b.json").write_text(json.dumps(missing))
    with pytest.raises(FileFormatError):
        read_model(tmp_path / "b.json")

    (tmp_path / "c.json").write_text("{not json")
    with pytest.raises(FileFormatError):
        read_model(tmp_path / "c.json")

    truncated = dict(good)
    truncated["parameters"] = good["parameters"][:-1]
    (tmp_path / "d.json").write_text(json.dumps(truncated))
    with pytest.raises(FileFormatError):
        read_model(tmp_path / "d.json")


def test_history_round_trip_is_bit_exact(tmp_path):
    history = [
        HistoryRecord(0, 1.25, 0.5, 16.0, 17.75, 0.9),
        HistoryRecord(100, 1e-300, 2.5e-4, 3.0e-3, 3.2503e-3, 0.07123456789012345),
    ]
    path = tmp_path / "history.csv"
    write_history(path, history)
    assert read_history(path) == history


def test_history_reader_rejects_wrong_header(tmp_path):
    path = tmp_path / "history.csv"
    path.write_text("epoch,loss\n0,1.0\n")
    with pytest.raises(FileFormatError):
        read_history(path)


def test_grid_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(21)
    grid = FieldGrid(
        np.linspace(-1.0, 1.0, 7),
        np.linspace(0.0, 1.0, 5),
        0.25,
        rng.normal(size=(5, 7)),
    )
    path = tmp_path / "grid.csv"
    write_grid(path, grid)
    got = read_grid(path)
    assert np.array_equal(got.x, grid.x)
    assert np.array_equal(got.z, grid.z)
    assert got.t == grid.t
    assert np.array_equal(got.values, grid.values)


def test_grid_rows_scan_x_fastest(tmp_path):
    grid = FieldGrid(
        np.array([0.0, 1.0]),
        np.array([0.0, 2.0]),
        0.0,
        np.array([[1.0, 2.0], [3.0, 4.0]]),
    )
    path = tmp_path / "grid.csv"
    write_grid(path, grid)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,z,t,u"
    coords = [tuple(float(v) for v in l.split(",")[:2]) for l in lines[1:]]
    assert coords == [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (1.0, 2.0)]


def test_grid_reader_rejects_scrambled_and_ragged_input(tmp_path):
    grid = FieldGrid(
        np.array([0.0, 1.0]),
        np.array([0.0, 2.0]),
        0.0,
        np.array([[1.0, 2.0], [3.0, 4.0]]),
    )
    path = tmp_path / "grid.csv"
    write_grid(path, grid)
    lines = path.read_text().splitlines()

    scrambled = [lines[0], lines[3], lines[4], lines[1], lines[2]]
    (tmp_path / "a.csv").write_text("\n".join(scrambled) + "\n")
    with pytest.raises(FileFormatError):
        read_grid(tmp_path / "a.csv")

    ragged = lines[:-1]  # 3 points cannot fill a rectangle
    (tmp_path / "b.csv").write_text("\n".join(ragged) + "\n")
    with pytest.raises(FileFormatError):
        read_grid(tmp_path / "b.csv")

    (tmp_path / "c.csv").write_text("x,z,t,u\n0,0,zero,1\n")
    with pytest.raises(FileFormatError):
        read_grid(tmp_path / "c.csv")
