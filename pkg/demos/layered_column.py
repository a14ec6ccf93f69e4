"""Walk through the layered-site configuration without the full training.

Parses the shipped site config, shows how each layer becomes its own
training problem on rescaled coordinates, and uses the analytical series as
a stand-in for the surrogates to preview the dissipation table the real
`consol2d case-study` run produces (that run trains 3 x 50,000 epochs).
"""
import numpy as np

from consol2d.config import parse_case_study_config
from consol2d.network import InputScaling
from consol2d.oracles import degree_of_consolidation, series_grid
from consol2d.problem import rescaled


def main():
    cfg = parse_case_study_config("configs/tianjin.yaml")
    print(f"load u0 = {cfg.u0} kPa over a {2 * cfg.half_width:g} m x "
          f"{cfg.depth:g} m cross-section, horizon {cfg.t_end:.0e} s")

    print(f"\n{'layer':>12} {'thickness':>10} {'c_v':>9} {'scaled c_x':>11} {'scaled c_z':>11}")
    for layer in cfg.layers:
        problem = cfg.problem_for(layer)
        scaling = InputScaling.to_unit(problem.geometry, problem.time)
        cx, cz = rescaled(problem, scaling).c_xz()
        print(f"{layer.name:>12} {layer.thickness:9.2f}m {layer.c_v:9.2e} "
              f"{cx:11.3f} {cz:11.3f}")

    # stitched dissipation preview, series standing in for the networks
    z = np.linspace(0.0, cfg.depth, cfg.grid_nz)
    inner = np.asarray(cfg.interfaces())
    band = np.searchsorted(inner, z, side="left")
    print(f"\n{'t [s]':>8} {'mean u':>8} {'max u':>8} {'degree':>8}")
    for t in cfg.snapshot_times:
        values = np.empty((cfg.grid_nz, cfg.grid_nx))
        for i, layer in enumerate(cfg.layers):
            grid = series_grid(cfg.problem_for(layer), cfg.grid_nx, cfg.grid_nz, t)
            values[band == i, :] = grid.values[band == i, :]
        degree = 1.0 - values.mean() / cfg.u0
        print(f"{t:8.0e} {values.mean():8.2f} {values.max():8.2f} {degree:8.3f}")


if __name__ == "__main__":
    main()
