"""Consolidation problem setup: geometry, drainage conditions, sampling.

A problem is a soil rectangle over a time window, the diffusion equation
u_t = c_x u_xx + c_z u_zz for excess pore pressure, a uniform initial
pressure q, and one condition per edge: drained edges pin u = 0
(Dirichlet), impervious edges pin the normal derivative (Neumann).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .network import InputScaling

EDGES = ("left", "right", "top", "bottom")
KINDS = ("dirichlet", "neumann")


@dataclass(frozen=True)
class Rectangle:
    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.z_min < self.z_max):
            raise ValueError("degenerate rectangle")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.z_max - self.z_min


@dataclass(frozen=True)
class TimeInterval:
    t_start: float
    t_end: float

    def __post_init__(self):
        if not (0.0 <= self.t_start < self.t_end):
            raise ValueError("need 0 <= t_start < t_end")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition on one edge. 'top' is z = z_min (the loaded surface)."""

    edge: str
    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.edge not in EDGES:
            raise ValueError(f"unknown edge {self.edge!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown condition kind {self.kind!r}")


def c_pair(c_v) -> tuple[float, float]:
    """Consolidation coefficient as an (c_x, c_z) pair; scalars are isotropic."""
    if isinstance(c_v, (tuple, list, np.ndarray)):
        cx, cz = (float(c) for c in c_v)
    else:
        cx = cz = float(c_v)
    if cx <= 0 or cz <= 0:
        raise ValueError("consolidation coefficients must be positive")
    return cx, cz


@dataclass(frozen=True)
class ConsolidationProblem:
    geometry: Rectangle
    time: TimeInterval
    c_v: float | tuple[float, float]
    q: float
    conditions: tuple[BoundaryCondition, ...]

    def __post_init__(self):
        c_pair(self.c_v)
        if self.q < 0:
            raise ValueError("initial excess pressure q must be nonnegative")
        edges = sorted(bc.edge for bc in self.conditions)
        if edges != sorted(EDGES):
            raise ValueError("need exactly one condition per edge")

    def condition(self, edge: str) -> BoundaryCondition:
        for bc in self.conditions:
            if bc.edge == edge:
                return bc
        raise KeyError(edge)

    def c_xz(self) -> tuple[float, float]:
        return c_pair(self.c_v)


def problem_from_bounds(
    x_min: float,
    x_max: float,
    z_min: float,
    z_max: float,
    t_end: float,
    c_v,
    q: float,
    drainage: str = "top",
    lateral_drained: bool = True,
    t_start: float = 0.0,
) -> ConsolidationProblem:
    """Build a problem from raw bounds and a drainage layout.

    drainage 'top' drains only the surface (impervious base); 'top_bottom'
    drains both horizontal edges. Lateral edges drain by default.
    """
    if drainage not in ("top", "top_bottom"):
        raise ValueError(f"unknown drainage layout {drainage!r}")
    side = "dirichlet" if lateral_drained else "neumann"
    bottom = "dirichlet" if drainage == "top_bottom" else "neumann"
    conditions = (
        BoundaryCondition("left", side),
        BoundaryCondition("right", side),
        BoundaryCondition("top", "dirichlet"),
        BoundaryCondition("bottom", bottom),
    )
    return ConsolidationProblem(
        geometry=Rectangle(x_min, x_max, z_min, z_max),
        time=TimeInterval(t_start, t_end),
        c_v=c_v,
        q=q,
        conditions=conditions,
    )


def make_top_drained(half_width, depth, c_v, q, t_end, lateral_drained=True) -> ConsolidationProblem:
    """Layer of the given depth, drained at the surface only."""
    return problem_from_bounds(
        -half_width, half_width, 0.0, depth, t_end, c_v, q, "top", lateral_drained
    )


def make_double_drained(half_width, half_depth, c_v, q, t_end, lateral_drained=True) -> ConsolidationProblem:
    """Layer of thickness 2*half_depth, drained at both horizontal faces."""
    return problem_from_bounds(
        -half_width, half_width, 0.0, 2.0 * half_depth, t_end, c_v, q, "top_bottom", lateral_drained
    )


def drainage_mode(problem: ConsolidationProblem) -> str:
    """Classify the vertical drainage layout ('top' or 'top_bottom')."""
    top, bottom = problem.condition("top"), problem.condition("bottom")
    if top.kind != "dirichlet":
        raise ValueError("the surface edge must be drained")
    return "top_bottom" if bottom.kind == "dirichlet" else "top"


def lateral_drained(problem: ConsolidationProblem) -> bool:
    left, right = problem.condition("left"), problem.condition("right")
    if left.kind != right.kind:
        raise ValueError("mixed lateral conditions are not supported")
    return left.kind == "dirichlet"


def _uniform_open(rng, lo: float, hi: float, n: int) -> np.ndarray:
    """Uniform draw strictly inside (lo, hi); endpoint hits are redrawn."""
    out = lo + (hi - lo) * rng.random(n)
    while True:
        bad = (out <= lo) | (out >= hi)
        if not bad.any():
            return out
        out[bad] = lo + (hi - lo) * rng.random(int(bad.sum()))


def _times_after_start(rng, time: TimeInterval, n: int) -> np.ndarray:
    # in (t_start, t_end]: rng.random lies in [0, 1)
    return time.t_end - time.duration * rng.random(n)


def sample_interior(problem: ConsolidationProblem, n: int, rng) -> np.ndarray:
    """n collocation points strictly inside the rectangle, t in (t_start, t_end].

    Returns an (n, 3) array of (x, z, t) rows.
    """
    g = problem.geometry
    x = _uniform_open(rng, g.x_min, g.x_max, n)
    z = _uniform_open(rng, g.z_min, g.z_max, n)
    t = _times_after_start(rng, problem.time, n)
    return np.stack([x, z, t], axis=1)


class BoundaryPoint(NamedTuple):
    x: float
    z: float
    t: float
    condition: BoundaryCondition


def sample_boundary(problem: ConsolidationProblem, n: int, rng) -> list[BoundaryPoint]:
    """n points on the edges, each tagged with its edge condition.

    Edges are chosen proportionally to their length; times lie in
    (t_start, t_end].
    """
    g = problem.geometry
    lengths = np.array([g.height, g.height, g.width, g.width])
    idx = rng.choice(4, size=n, p=lengths / lengths.sum())
    pos = rng.random(n)
    t = _times_after_start(rng, problem.time, n)
    conditions = {edge: problem.condition(edge) for edge in EDGES}
    points = []
    for i in range(n):
        edge = EDGES[idx[i]]
        if edge == "left":
            xz = (g.x_min, g.z_min + g.height * pos[i])
        elif edge == "right":
            xz = (g.x_max, g.z_min + g.height * pos[i])
        elif edge == "top":
            xz = (g.x_min + g.width * pos[i], g.z_min)
        else:
            xz = (g.x_min + g.width * pos[i], g.z_max)
        points.append(BoundaryPoint(xz[0], xz[1], t[i], conditions[edge]))
    return points


def sample_initial(problem: ConsolidationProblem, n: int, rng) -> np.ndarray:
    """n points at t = t_start where the target pressure is q, as (n, 3) rows.

    Positions stay strictly inside the rectangle: on drained edges the
    initial condition conflicts with the boundary value, so edges are left
    to the boundary term.
    """
    g = problem.geometry
    x = _uniform_open(rng, g.x_min, g.x_max, n)
    z = _uniform_open(rng, g.z_min, g.z_max, n)
    t = np.full(n, float(problem.time.t_start))
    return np.stack([x, z, t], axis=1)


def pde_residual(jet, c_v):
    """Diffusion residual u_t - (c_x u_xx + c_z u_zz); zero on exact solutions."""
    cx, cz = c_pair(c_v)
    return jet.d_t - (cx * jet.d_xx + cz * jet.d_zz)


def bc_residual(jet, condition: BoundaryCondition):
    """Residual of one edge condition at a point: value or normal derivative."""
    if condition.kind == "dirichlet":
        return jet.val - condition.value
    if condition.edge in ("top", "bottom"):
        return jet.d_z - condition.value
    return jet.d_x - condition.value


def rescaled(problem: ConsolidationProblem, scaling: InputScaling) -> ConsolidationProblem:
    """The same physics in scaled coordinates.

    Coordinates map through `scaling`; the consolidation coefficient becomes
    the per-axis pair (c_x T / Lx^2, c_z T / Lz^2). Pressure is not scaled.
    Only homogeneous (zero-valued) edge conditions survive the map
    unchanged, so anything else is rejected.
    """
    if any(bc.value != 0.0 for bc in problem.conditions):
        raise ValueError("rescaling supports homogeneous edge conditions only")
    g, tw = problem.geometry, problem.time
    sx, sz, st = scaling.x_scale, scaling.z_scale, scaling.t_scale
    cx, cz = problem.c_xz()
    return replace(
        problem,
        geometry=Rectangle(
            (g.x_min - scaling.x_offset) / sx,
            (g.x_max - scaling.x_offset) / sx,
            (g.z_min - scaling.z_offset) / sz,
            (g.z_max - scaling.z_offset) / sz,
        ),
        time=TimeInterval(
            (tw.t_start - scaling.t_offset) / st,
            (tw.t_end - scaling.t_offset) / st,
        ),
        c_v=(cx * st / sx**2, cz * st / sz**2),
    )
