"""On-disk artifacts: JSON model documents, CSV histories and field grids.

Floats are written in shortest round-trip form (json / str), so reading a
file back reproduces the exact float64 bits and repeated runs are
byte-identical.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .network import InputScaling, NetworkParams, SurrogateModel
from .oracles import FieldGrid
from .problem import ConsolidationProblem, drainage_mode, lateral_drained, problem_from_bounds
from .training import HistoryRecord

MODEL_SCHEMA = "consolidation-pinn-model-v1"
HISTORY_HEADER = ("epoch", "mse_f", "mse_b", "mse_u", "total", "test_metric")
GRID_HEADER = ("x", "z", "t", "u")


class FileFormatError(ValueError):
    """A file existed and was readable but did not hold what it should."""


def problem_to_dict(problem: ConsolidationProblem) -> dict:
    g, tw = problem.geometry, problem.time
    if isinstance(problem.c_v, (tuple, list, np.ndarray)):
        c: object = [float(v) for v in problem.c_v]
    else:
        c = float(problem.c_v)
    return {
        "x_min": g.x_min,
        "x_max": g.x_max,
        "z_min": g.z_min,
        "z_max": g.z_max,
        "t0": tw.t_start,
        "t1": tw.t_end,
        "c_v": c,
        "q": problem.q,
        "drainage_mode": drainage_mode(problem),
        "lateral_drained": lateral_drained(problem),
    }


def problem_from_dict(d: dict) -> ConsolidationProblem:
    c_v = d["c_v"]
    if isinstance(c_v, list):
        c_v = tuple(float(v) for v in c_v)
    return problem_from_bounds(
        d["x_min"], d["x_max"], d["z_min"], d["z_max"], d["t1"],
        c_v, d["q"], d["drainage_mode"], d["lateral_drained"],
        t_start=d.get("t0", 0.0),
    )


def write_json(path, doc: dict) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def write_model(path, model: SurrogateModel, problem: ConsolidationProblem) -> None:
    """Store a trained model with the physical problem it solves."""
    s = model.scaling
    doc = {
        "schema": MODEL_SCHEMA,
        "activation": model.activation,
        "layer_sizes": list(model.params.layer_sizes),
        "parameters": model.params.to_vector().tolist(),
        "input_scaling": {
            "x_offset": s.x_offset, "x_scale": s.x_scale,
            "z_offset": s.z_offset, "z_scale": s.z_scale,
            "t_offset": s.t_offset, "t_scale": s.t_scale,
        },
        "problem": problem_to_dict(problem),
    }
    write_json(path, doc)


def read_model(path) -> tuple[SurrogateModel, ConsolidationProblem]:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"{path}: not valid JSON ({e})") from e
    try:
        if doc["schema"] != MODEL_SCHEMA:
            raise FileFormatError(f"{path}: unknown schema {doc['schema']!r}")
        params = NetworkParams.from_vector(
            tuple(doc["layer_sizes"]),
            np.asarray(doc["parameters"], dtype=np.float64),
        )
        model = SurrogateModel(params, InputScaling(**doc["input_scaling"]),
                               doc["activation"])
        problem = problem_from_dict(doc["problem"])
    except FileFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"{path}: malformed model document ({e})") from e
    return model, problem


def write_history(path, history) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(HISTORY_HEADER)
        for r in history:
            w.writerow([r.epoch, r.mse_f, r.mse_b, r.mse_u, r.total, r.test_metric])


def read_history(path) -> list[HistoryRecord]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != HISTORY_HEADER:
        raise FileFormatError(f"{path}: missing history header")
    try:
        return [
            HistoryRecord(int(r[0]), *(float(v) for v in r[1:6]))
            for r in rows[1:]
        ]
    except (ValueError, IndexError) as e:
        raise FileFormatError(f"{path}: malformed history row ({e})") from e


def write_grid(path, grid: FieldGrid) -> None:
    """One snapshot as x,z,t,u rows; z varies slowest, matching values[iz, ix]."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(GRID_HEADER)
        for iz, zv in enumerate(grid.z):
            for ix, xv in enumerate(grid.x):
                w.writerow([xv, zv, grid.t, grid.values[iz, ix]])


def read_grid(path) -> FieldGrid:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != GRID_HEADER:
        raise FileFormatError(f"{path}: missing grid header")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as e:
        raise FileFormatError(f"{path}: malformed grid row ({e})") from e
    if data.ndim != 2 or data.shape[1] != 4:
        raise FileFormatError(f"{path}: expected x,z,t,u rows")
    x, z = np.unique(data[:, 0]), np.unique(data[:, 1])
    ts = np.unique(data[:, 2])
    if ts.size != 1 or data.shape[0] != x.size * z.size:
        raise FileFormatError(f"{path}: not a single-time rectangular grid")
    values = data[:, 3].reshape(z.size, x.size)
    if not (np.array_equal(np.tile(x, z.size), data[:, 0])
            and np.array_equal(np.repeat(z, x.size), data[:, 1])):
        raise FileFormatError(f"{path}: rows are not in z-outer, x-inner order")
    return FieldGrid(x, z, float(ts[0]), values)
