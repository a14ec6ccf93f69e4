"""Physics-informed solver for 2-D soil consolidation.

A tanh network is trained to satisfy the pore-pressure diffusion equation,
the drainage boundary conditions, and the initial surcharge; independent
sine-series and finite-difference oracles check the result.
"""

from .autodiff import Jet, Tape, Var, jet_affine, jet_constant, jet_from_input, jet_tanh, param_gradient
from .network import InputScaling, NetworkParams, SurrogateModel, forward, forward_jet, init_glorot
from .oracles import (
    ConsolidationDegree,
    FieldGrid,
    SeriesSpec,
    bilinear,
    degree_of_consolidation,
    fd_field_at_points,
    fd_solve,
    series_grid,
    series_solution,
)
from .problem import (
    BoundaryCondition,
    ConsolidationProblem,
    Rectangle,
    TimeInterval,
    bc_residual,
    make_double_drained,
    make_top_drained,
    pde_residual,
    problem_from_bounds,
    rescaled,
    sample_boundary,
    sample_initial,
    sample_interior,
)
from .training import (
    AdamState,
    Collocation,
    HistoryRecord,
    LossBreakdown,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    compute_loss,
    relative_l2,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BoundaryCondition",
    "Collocation",
    "ConsolidationDegree",
    "ConsolidationProblem",
    "FieldGrid",
    "HistoryRecord",
    "InputScaling",
    "Jet",
    "LossBreakdown",
    "NetworkParams",
    "Rectangle",
    "SeriesSpec",
    "SurrogateModel",
    "Tape",
    "TimeInterval",
    "TrainConfig",
    "TrainingDiverged",
    "Var",
    "adam_step",
    "bc_residual",
    "bilinear",
    "compute_loss",
    "degree_of_consolidation",
    "fd_field_at_points",
    "fd_solve",
    "forward",
    "forward_jet",
    "init_glorot",
    "jet_affine",
    "jet_constant",
    "jet_from_input",
    "jet_tanh",
    "make_double_drained",
    "make_top_drained",
    "param_gradient",
    "pde_residual",
    "problem_from_bounds",
    "relative_l2",
    "rescaled",
    "sample_boundary",
    "sample_initial",
    "sample_interior",
    "series_grid",
    "series_solution",
    "train",
]
