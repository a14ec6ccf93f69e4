"""Reference solutions the network is judged against.

Two independent oracles for the same problems: a separable sine-series
solution (spectrally accurate for the uniform initial condition) and an
explicit central-difference time march. They share no code with the
network path, so agreement between all three is meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .problem import ConsolidationProblem, drainage_mode, lateral_drained


@dataclass(frozen=True)
class SeriesSpec:
    """Series truncation: odd mode indices 1, 3, ... up to and including `truncation`."""

    truncation: int = 199

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("need at least one series term")
        if self.truncation % 2 == 0:
            raise ValueError("truncation must be odd (the even modes vanish)")


@dataclass(frozen=True)
class FieldGrid:
    """Pressure snapshot on a rectangular grid: values[iz, ix] = u(x[ix], z[iz], t).

    Row 0 is z_min, the loaded surface.
    """

    x: np.ndarray
    z: np.ndarray
    t: float
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.z.size, self.x.size):
            raise ValueError("values must be laid out (len(z), len(x))")
        if np.any(np.diff(self.x) <= 0) or np.any(np.diff(self.z) <= 0):
            raise ValueError("grid axes must be strictly increasing")
        if self.t < 0:
            raise ValueError("negative snapshot time")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid holds non-finite values")


def _check_domain(problem: ConsolidationProblem, x, z, t, bound_t: bool = True) -> None:
    g, tw = problem.geometry, problem.time
    pad_x = 1e-9 * max(1.0, abs(g.x_min), abs(g.x_max))
    pad_z = 1e-9 * max(1.0, abs(g.z_min), abs(g.z_max))
    pad_t = 1e-9 * max(1.0, tw.t_end)
    if np.any(x < g.x_min - pad_x) or np.any(x > g.x_max + pad_x):
        raise ValueError("x outside the soil rectangle")
    if np.any(z < g.z_min - pad_z) or np.any(z > g.z_max + pad_z):
        raise ValueError("z outside the soil rectangle")
    if np.any(t < -pad_t):
        raise ValueError("t before the load application")
    if bound_t and np.any(t > tw.t_end + pad_t):
        raise ValueError("t outside the problem window")


def _check_series_supported(problem: ConsolidationProblem) -> None:
    drainage_mode(problem)  # raises unless the surface is drained
    lateral_drained(problem)
    if problem.time.t_start != 0.0:
        raise ValueError("the series counts time from load application at t = 0")
    if any(bc.value != 0.0 for bc in problem.conditions):
        raise ValueError("the series handles homogeneous edge conditions only")


def _factor(xi, period: float, c: float, t, n_terms: int):
    """Drained-drained sine-series factor on [0, period] for a unit initial value."""
    k = np.arange(1, n_terms + 1, 2, dtype=np.float64)
    a = np.pi * k / period
    s = np.sin(np.multiply.outer(xi, a))
    e = np.exp(-c * np.multiply.outer(t, a * a))
    return (4.0 / np.pi) * ((s * e) / k).sum(axis=-1)


def series_solution(problem: ConsolidationProblem, x, z, t, spec: SeriesSpec | None = None):
    """Series value of u at (x, z, t); accepts scalars or broadcastable arrays.

    The 2-D solution for a uniform initial pressure separates into a product
    of 1-D factors. A surface-drained layer of height H behaves like the
    lower half of a drained-drained layer of height 2H, which is how the
    impervious base enters.
    """
    spec = spec or SeriesSpec()
    _check_series_supported(problem)
    xa, za, ta = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64),
        np.asarray(z, dtype=np.float64),
        np.asarray(t, dtype=np.float64),
    )
    _check_domain(problem, xa, za, ta, bound_t=False)
    g = problem.geometry
    cx, cz = problem.c_xz()
    if lateral_drained(problem):
        fx = _factor(xa - g.x_min, g.width, cx, ta, spec.truncation)
    else:
        fx = np.ones_like(xa)
    z_period = g.height if drainage_mode(problem) == "top_bottom" else 2.0 * g.height
    fz = _factor(za - g.z_min, z_period, cz, ta, spec.truncation)
    u = problem.q * fx * fz
    if u.ndim == 0:
        return float(u)
    return u


def series_grid(problem: ConsolidationProblem, nx: int, nz: int, t: float,
                spec: SeriesSpec | None = None) -> FieldGrid:
    """Series snapshot on a regular nx-by-nz grid, evaluated factor by factor."""
    spec = spec or SeriesSpec()
    _check_series_supported(problem)
    g = problem.geometry
    _check_domain(problem, np.asarray(g.x_min), np.asarray(g.z_min), np.asarray(t), bound_t=False)
    x = np.linspace(g.x_min, g.x_max, nx)
    z = np.linspace(g.z_min, g.z_max, nz)
    cx, cz = problem.c_xz()
    if lateral_drained(problem):
        fx = _factor(x - g.x_min, g.width, cx, float(t), spec.truncation)
    else:
        fx = np.ones(nx)
    z_period = g.height if drainage_mode(problem) == "top_bottom" else 2.0 * g.height
    fz = _factor(z - g.z_min, z_period, cz, float(t), spec.truncation)
    return FieldGrid(x, z, float(t), problem.q * np.outer(fz, fx))


def _pin_drained(u: np.ndarray, problem: ConsolidationProblem) -> None:
    for bc in problem.conditions:
        if bc.kind != "dirichlet":
            continue
        if bc.edge == "left":
            u[:, 0] = bc.value
        elif bc.edge == "right":
            u[:, -1] = bc.value
        elif bc.edge == "top":
            u[0, :] = bc.value
        else:
            u[-1, :] = bc.value


def _startup_field(problem: ConsolidationProblem, nx: int, nz: int) -> np.ndarray:
    """Initial grid: q inside, halved along each drained face.

    The exact initial condition jumps from q to 0 at drained faces; starting
    the drained nodes at the jump midpoint (q/4 at drained-drained corners)
    matches the Cesaro limit of the separable solution at t -> 0 and removes
    most of the early-time startup error of the march.
    """
    gx, gz = np.ones(nx), np.ones(nz)
    for bc in problem.conditions:
        if bc.kind != "dirichlet":
            continue
        if bc.edge == "left":
            gx[0] = 0.5
        elif bc.edge == "right":
            gx[-1] = 0.5
        elif bc.edge == "top":
            gz[0] = 0.5
        else:
            gz[-1] = 0.5
    return float(problem.q) * np.outer(gz, gx)


def _march(problem: ConsolidationProblem, nx: int, nz: int, times: np.ndarray,
           safety: float) -> Iterator[tuple[float, np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (t, x, z, u) at each requested time, marching explicitly between them.

    Impervious edges are handled by mirror ghosts (np.pad reflect); drained
    edges are re-pinned after every step. The step before each target is
    clipped so snapshots land exactly on it. Yielded fields have drained
    edges pinned even at t = 0, where the march itself starts from the
    jump-midpoint field.
    """
    g = problem.geometry
    x = np.linspace(g.x_min, g.x_max, nx)
    z = np.linspace(g.z_min, g.z_max, nz)
    dx, dz = x[1] - x[0], z[1] - z[0]
    cx, cz = problem.c_xz()
    dt = safety / (2.0 * (cx / dx**2 + cz / dz**2))
    u = _startup_field(problem, nx, nz)
    t = 0.0
    for target in times:
        while t < target:
            step = min(dt, target - t)
            up = np.pad(u, 1, mode="reflect")
            center = up[1:-1, 1:-1]
            u = center \
                + (cx * step / dx**2) * (up[1:-1, 2:] - 2.0 * center + up[1:-1, :-2]) \
                + (cz * step / dz**2) * (up[2:, 1:-1] - 2.0 * center + up[:-2, 1:-1])
            _pin_drained(u, problem)
            t = target if target - t <= step * (1.0 + 1e-12) else t + step
        out = u.copy()
        _pin_drained(out, problem)
        yield target, x, z, out


def _check_fd_args(problem, nx, nz, times) -> np.ndarray:
    if nx < 3 or nz < 3:
        raise ValueError("need at least 3 grid nodes per axis")
    if problem.time.t_start != 0.0:
        raise ValueError("the march starts from the load application at t = 0")
    ts = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if ts.size == 0:
        raise ValueError("no snapshot times given")
    pad = 1e-9 * max(1.0, problem.time.t_end)
    if np.any(ts < 0.0) or np.any(ts > problem.time.t_end + pad):
        raise ValueError("snapshot times must lie in the problem window")
    return ts


def fd_solve(problem: ConsolidationProblem, nx: int, nz: int, times,
             safety: float = 0.9) -> list[FieldGrid]:
    """Finite-difference snapshots at the given times, sorted ascending.

    Stability of the explicit stencil requires
    dt <= 1 / (2 (c_x/dx^2 + c_z/dz^2)); `safety` scales that bound.
    """
    if not (0.0 < safety <= 1.0):
        raise ValueError("safety must be in (0, 1]")
    ts = np.unique(_check_fd_args(problem, nx, nz, times))
    return [
        FieldGrid(x, z, t, u)
        for t, x, z, u in _march(problem, nx, nz, ts, safety)
    ]


def fd_field_at_points(problem: ConsolidationProblem, points: np.ndarray,
                       nx: int, nz: int, safety: float = 0.9) -> np.ndarray:
    """Finite-difference u at arbitrary (x, z, t) rows, bilinear in space.

    One march covers all requested times; only a single grid is held at a
    time, so thousands of distinct times stay cheap in memory.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be (n, 3) rows of (x, z, t)")
    _check_domain(problem, pts[:, 0], pts[:, 1], pts[:, 2])
    ts = _check_fd_args(problem, nx, nz, pts[:, 2])
    order = np.unique(ts)
    out = np.empty(pts.shape[0])
    for t, x, z, u in _march(problem, nx, nz, order, safety):
        sel = pts[:, 2] == t
        grid = FieldGrid(x, z, t, u)
        out[sel] = bilinear(grid, pts[sel, 0], pts[sel, 1])
    return out


def bilinear(grid: FieldGrid, x, z):
    """Bilinear interpolation of a snapshot at in-domain points."""
    xa = np.asarray(x, dtype=np.float64)
    za = np.asarray(z, dtype=np.float64)
    pad_x = 1e-9 * max(1.0, abs(grid.x[0]), abs(grid.x[-1]))
    pad_z = 1e-9 * max(1.0, abs(grid.z[0]), abs(grid.z[-1]))
    if np.any(xa < grid.x[0] - pad_x) or np.any(xa > grid.x[-1] + pad_x):
        raise ValueError("x outside the grid")
    if np.any(za < grid.z[0] - pad_z) or np.any(za > grid.z[-1] + pad_z):
        raise ValueError("z outside the grid")
    ix = np.clip(np.searchsorted(grid.x, xa) - 1, 0, grid.x.size - 2)
    iz = np.clip(np.searchsorted(grid.z, za) - 1, 0, grid.z.size - 2)
    wx = np.clip((xa - grid.x[ix]) / (grid.x[ix + 1] - grid.x[ix]), 0.0, 1.0)
    wz = np.clip((za - grid.z[iz]) / (grid.z[iz + 1] - grid.z[iz]), 0.0, 1.0)
    v = grid.values
    lo = (1.0 - wx) * v[iz, ix] + wx * v[iz, ix + 1]
    hi = (1.0 - wx) * v[iz + 1, ix] + wx * v[iz + 1, ix + 1]
    out = (1.0 - wz) * lo + wz * hi
    if out.ndim == 0:
        return float(out)
    return out


class ConsolidationDegree(NamedTuple):
    raw: float
    clamped: float


def degree_of_consolidation(grid: FieldGrid, q: float) -> ConsolidationDegree:
    """Average dissipation 1 - mean(u)/q over a snapshot.

    The raw value can leave [0, 1] when the field over- or undershoots;
    `clamped` is the reporting value.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    raw = float(1.0 - grid.values.mean() / q)
    return ConsolidationDegree(raw, min(1.0, max(0.0, raw)))
