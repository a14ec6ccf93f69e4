"""Command line front end: train, oracle, compare, case-study.

Exit codes: 0 success, 2 bad configuration or input content, 3 runtime
failure (divergence), 4 I/O trouble.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import CaseStudyConfig, ConfigError, RunConfig, parse_case_study_config, parse_config
from .files import (
    FileFormatError,
    problem_to_dict,
    read_model,
    write_grid,
    write_history,
    write_json,
    write_model,
)
from .network import InputScaling, SurrogateModel, init_glorot
from .oracles import FieldGrid, SeriesSpec, degree_of_consolidation, fd_field_at_points, fd_solve, series_grid, series_solution
from .problem import rescaled, sample_interior
from .training import TrainingDiverged, relative_l2, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def _grid_name(method: str, index: int, t: float) -> str:
    return f"{method}_{index:02d}_t{t:g}.csv"


def _predict_grid(model: SurrogateModel, problem, nx: int, nz: int, t: float) -> FieldGrid:
    g = problem.geometry
    x = np.linspace(g.x_min, g.x_max, nx)
    z = np.linspace(g.z_min, g.z_max, nz)
    xx, zz = np.meshgrid(x, z)
    return FieldGrid(x, z, float(t), model.predict(xx, zz, t))


def cmd_train(config_path, out_dir, seed: int | None = None) -> int:
    """Train per the config and write model.json, history.csv, summary.json."""
    cfg = parse_config(config_path).with_seed(seed)
    problem = cfg.problem
    scaling = (InputScaling.to_unit(problem.geometry, problem.time)
               if cfg.rescale_inputs else InputScaling())
    train_problem = problem if scaling.is_identity() else rescaled(problem, scaling)

    params = init_glorot(cfg.layer_sizes(), cfg.training.seed)
    started = time.perf_counter()
    params, history = train(train_problem, params, cfg.training,
                            SeriesSpec(cfg.series_terms))
    wall = time.perf_counter() - started

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = SurrogateModel(params, scaling)
    write_model(out / "model.json", model, problem)
    write_history(out / "history.csv", history)
    final = history[-1]
    write_json(out / "summary.json", {
        "epochs": cfg.training.epochs,
        "seed": cfg.training.seed,
        "n_params": params.n_params,
        "rescale_inputs": cfg.rescale_inputs,
        "wall_time_s": wall,
        "final": final._asdict(),
    })
    print(f"trained {cfg.training.epochs} epochs (seed {cfg.training.seed}): "
          f"loss {final.total:.3e}, test relative L2 {final.test_metric:.3e}")
    return EXIT_OK


def cmd_oracle(config_path, method: str, out_dir) -> int:
    """Write reference snapshots for the config's problem and times."""
    cfg = parse_config(config_path)
    problem = cfg.problem
    times = sorted(set(cfg.snapshot_times))
    if method == "series":
        grids = [series_grid(problem, cfg.grid_nx, cfg.grid_nz, t,
                             SeriesSpec(cfg.series_terms)) for t in times]
    elif method == "fd":
        grids = fd_solve(problem, cfg.grid_nx, cfg.grid_nz, times)
    else:
        raise ConfigError("method", f"unknown oracle {method!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, grid in enumerate(grids):
        write_grid(out / _grid_name(method, i, grid.t), grid)
        print(f"{method} snapshot t={grid.t:g}: "
              f"mean u {grid.values.mean():.4f}, max u {grid.values.max():.4f}")
    return EXIT_OK


def _require_same_problem(model_problem, config_problem) -> None:
    a, b = problem_to_dict(model_problem), problem_to_dict(config_problem)
    for key in a:
        va, vb = a[key], b[key]
        if isinstance(va, float):
            same = abs(va - vb) <= 1e-12 * max(1.0, abs(va), abs(vb))
        else:
            same = va == vb
        if not same:
            raise ConfigError(f"problem.{key}",
                              f"model was trained for {va!r}, config says {vb!r}")


def cmd_compare(model_path, config_path, oracle: str, report_path) -> int:
    """Score a trained model against an oracle; write a JSON report."""
    if oracle not in ("series", "fd"):
        raise ConfigError("oracle", f"unknown oracle {oracle!r}")
    model, model_problem = read_model(model_path)
    cfg = parse_config(config_path)
    problem = cfg.problem
    _require_same_problem(model_problem, problem)
    spec = SeriesSpec(cfg.series_terms)

    rng = np.random.default_rng(cfg.training.seed)
    pts = sample_interior(problem, cfg.n_test, rng)
    pred = model.predict(pts[:, 0], pts[:, 1], pts[:, 2])
    if oracle == "series":
        ref = series_solution(problem, pts[:, 0], pts[:, 1], pts[:, 2], spec)
    else:
        ref = fd_field_at_points(problem, pts, cfg.grid_nx, cfg.grid_nz)
    overall = relative_l2(pred, ref)

    times = sorted(set(cfg.snapshot_times))
    if oracle == "series":
        ref_grids = [series_grid(problem, cfg.grid_nx, cfg.grid_nz, t, spec) for t in times]
    else:
        ref_grids = fd_solve(problem, cfg.grid_nx, cfg.grid_nz, times)
    snapshots = []
    for rg in ref_grids:
        pg = _predict_grid(model, problem, cfg.grid_nx, cfg.grid_nz, rg.t)
        deg_p = degree_of_consolidation(pg, problem.q)
        deg_r = degree_of_consolidation(rg, problem.q)
        snapshots.append({
            "t": rg.t,
            "relative_l2": relative_l2(pg.values, rg.values),
            "max_abs_error": float(np.max(np.abs(pg.values - rg.values))),
            "degree_predicted": deg_p.clamped,
            "degree_reference": deg_r.clamped,
            "degree_predicted_raw": deg_p.raw,
            "degree_reference_raw": deg_r.raw,
        })
        print(f"t={rg.t:g}: relative L2 {snapshots[-1]['relative_l2']:.3e}, "
              f"degree {deg_p.clamped:.3f} vs {deg_r.clamped:.3f} ({oracle})")

    report = {
        "oracle": oracle,
        "n_points": int(pts.shape[0]),
        "relative_l2": overall,
        "snapshots": snapshots,
    }
    Path(report_path).parent.mkdir(parents=True, exist_ok=True)
    write_json(report_path, report)
    print(f"overall relative L2 on {pts.shape[0]} points: {overall:.3e}")
    return EXIT_OK


def cmd_case_study(config_path, out_dir, seed: int | None = None) -> int:
    """Train one model per soil layer, stitch the column field, summarize dissipation."""
    cfg = parse_case_study_config(config_path).with_seed(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    models: list[SurrogateModel] = []
    layer_summaries = []
    for i, layer in enumerate(cfg.layers):
        problem = cfg.problem_for(layer)
        scaling = InputScaling.to_unit(problem.geometry, problem.time)
        scaled = rescaled(problem, scaling)
        # distinct init/sampling streams per layer, still driven by one seed
        t_cfg = replace(cfg.training, seed=cfg.training.seed + i)
        params = init_glorot(cfg.layer_sizes(), t_cfg.seed)
        try:
            params, history = train(scaled, params, t_cfg, SeriesSpec(cfg.series_terms))
        except TrainingDiverged as e:
            raise TrainingDiverged(e.epoch, f"{e.term} (layer {layer.name!r})") from e
        model = SurrogateModel(params, scaling)
        write_model(out / f"model_{layer.name}.json", model, problem)
        write_history(out / f"history_{layer.name}.csv", history)
        final = history[-1]
        layer_summaries.append({
            "layer": layer.name,
            "c_v": layer.c_v,
            "final_loss": final.total,
            "test_metric": final.test_metric,
        })
        models.append(model)
        print(f"layer {layer.name}: loss {final.total:.3e}, "
              f"test relative L2 {final.test_metric:.3e}")

    # stitched column: each grid row reads the model whose layer holds that depth
    g = cfg.problem_for(cfg.layers[0]).geometry
    x = np.linspace(g.x_min, g.x_max, cfg.grid_nx)
    z = np.linspace(g.z_min, g.z_max, cfg.grid_nz)
    inner = np.asarray(cfg.interfaces())
    band = np.searchsorted(inner, z, side="left")
    xx, zz = np.meshgrid(x, z)

    rows = []
    times = sorted(set(cfg.snapshot_times))
    for ti, t in enumerate(times):
        values = np.empty((cfg.grid_nz, cfg.grid_nx))
        for li, layer in enumerate(cfg.layers):
            layer_values = models[li].predict(xx, zz, t)
            write_grid(out / _grid_name(layer.name, ti, t),
                       FieldGrid(x, z, t, layer_values))
            sel = band == li
            values[sel, :] = layer_values[sel, :]
        grid = FieldGrid(x, z, t, values)
        write_grid(out / _grid_name("field", ti, t), grid)
        rows.append((t, float(values.mean()), float(values.max())))
        print(f"t={t:g}: mean u {rows[-1][1]:.3f}, max u {rows[-1][2]:.3f}")

    with open(out / "dissipation.csv", "w", newline="") as f:
        f.write("t,mean_u,max_u\n")
        for t, mean_u, max_u in rows:
            f.write(f"{t!r},{mean_u!r},{max_u!r}\n")
    write_json(out / "summary.json", {
        "u0": cfg.u0,
        "depth": cfg.depth,
        "layers": layer_summaries,
        "dissipation": [
            {"t": t, "mean_u": m, "max_u": mx} for t, m, mx in rows
        ],
    })
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="consol2d",
        description="Train and check neural surrogates for 2-D consolidation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a network from a YAML config")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=None, help="override training.seed")

    o = sub.add_parser("oracle", help="write reference snapshots")
    o.add_argument("--config", required=True)
    o.add_argument("--method", required=True, choices=("series", "fd"))
    o.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="score a trained model against an oracle")
    c.add_argument("--model", required=True)
    c.add_argument("--config", required=True)
    c.add_argument("--oracle", default="series", choices=("series", "fd"))
    c.add_argument("--report", required=True)

    s = sub.add_parser("case-study", help="layered-column study from a site config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None, help="override training.seed")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args.config, args.out, args.seed)
        if args.command == "oracle":
            return cmd_oracle(args.config, args.method, args.out)
        if args.command == "compare":
            return cmd_compare(args.model, args.config, args.oracle, args.report)
        return cmd_case_study(args.config, args.out, args.seed)
    except (ConfigError, FileFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
