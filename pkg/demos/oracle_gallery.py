"""Cross-check the two reference solutions on the drained-rectangle problem.

The analytical series and the explicit finite-difference march are built from
different approximations, so their agreement is a strong sanity check on
both.  Also prints the degree-of-consolidation curve.
"""
import numpy as np

from consol2d.oracles import degree_of_consolidation, fd_solve, series_grid
from consol2d.problem import make_top_drained


def main():
    problem = make_top_drained(
        half_width=1.0, depth=1.0, c_v=0.01, q=5.0, t_end=1.0)
    times = [0.05, 0.2, 0.5, 1.0]

    print("explicit FD march vs separable series, 201 x 101 grid")
    print(f"{'t':>6} {'max |diff|':>12} {'% of q':>8} {'U (series)':>11}")
    for grid in fd_solve(problem, 201, 101, times):
        reference = series_grid(problem, 201, 101, grid.t)
        gap = np.max(np.abs(grid.values - reference.values))
        degree = degree_of_consolidation(reference, problem.q)
        print(f"{grid.t:6.2f} {gap:12.2e} {100 * gap / problem.q:7.3f}% "
              f"{degree.clamped:11.3f}")

    print("\ncenterline pressure just under the drained surface (series):")
    for t in times:
        g = series_grid(problem, 41, 21, t)
        shallow = g.values[1, 20]  # z = 0.05, x = 0
        bar = "#" * int(round(40 * shallow / problem.q))
        print(f"  t={t:4.2f}  u={shallow:6.3f}  {bar}")


if __name__ == "__main__":
    main()
