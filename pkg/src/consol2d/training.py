"""Training: composite physics loss, Adam, and the held-out test metric.

The loss is mse_f + mse_b + mse_u (equation residual, edge conditions,
initial pressure), each term a mean square over a fixed collocation set
drawn once up front. Full-batch Adam; nothing is resampled between epochs,
so runs are bit-reproducible for a given seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .autodiff import param_gradient, vmean, vsquare, vsum
from .network import NetworkParams, forward, forward_jet
from .oracles import SeriesSpec, series_solution
from .problem import ConsolidationProblem, pde_residual, sample_boundary, sample_initial, sample_interior


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    n_interior: int = 1000
    n_boundary: int = 100
    n_initial: int = 100
    n_test: int = 1000
    seed: int = 42
    log_every: int = 100
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # (pde, boundary, initial)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if min(self.n_interior, self.n_boundary, self.n_initial, self.n_test) < 1:
            raise ValueError("collocation counts must be positive")
        if self.log_every < 1:
            raise ValueError("log_every must be at least 1")
        w = tuple(float(v) for v in self.loss_weights)
        if len(w) != 3 or any(v < 0 for v in w) or sum(w) == 0:
            raise ValueError("loss_weights must be three nonnegative values, not all zero")
        object.__setattr__(self, "loss_weights", w)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(np.zeros(n_params), np.zeros(n_params), 0)


def adam_step(params: NetworkParams, grad: np.ndarray, state: AdamState,
              config: TrainConfig) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update on the flat parameter vector."""
    t = state.step + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grad
    v = config.beta2 * state.v + (1.0 - config.beta2) * (grad * grad)
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    theta = params.to_vector() - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return NetworkParams.from_vector(params.layer_sizes, theta), AdamState(m, v, t)


@dataclass(frozen=True)
class Collocation:
    """Fixed training point sets, grouped by which residual they feed."""

    interior: np.ndarray          # (n, 3) rows of (x, z, t)
    initial: np.ndarray           # (n, 3), all at t_start
    dirichlet: np.ndarray         # (nd, 3) on drained edges
    dirichlet_target: np.ndarray  # (nd,)
    neumann: np.ndarray           # (nn, 3) on impervious edges
    neumann_target: np.ndarray    # (nn,)
    neumann_uses_dz: np.ndarray   # (nn,) 1.0 on horizontal edges, else 0.0
    n_boundary: int

    @classmethod
    def draw(cls, problem: ConsolidationProblem, config: TrainConfig, rng) -> "Collocation":
        # draw order is part of the reproducibility contract
        interior = sample_interior(problem, config.n_interior, rng)
        edge_points = sample_boundary(problem, config.n_boundary, rng)
        initial = sample_initial(problem, config.n_initial, rng)
        d_rows, d_tgt, n_rows, n_tgt, n_dz = [], [], [], [], []
        for p in edge_points:
            if p.condition.kind == "dirichlet":
                d_rows.append((p.x, p.z, p.t))
                d_tgt.append(p.condition.value)
            else:
                n_rows.append((p.x, p.z, p.t))
                n_tgt.append(p.condition.value)
                n_dz.append(1.0 if p.condition.edge in ("top", "bottom") else 0.0)
        return cls(
            interior=interior,
            initial=initial,
            dirichlet=np.array(d_rows, dtype=np.float64).reshape(-1, 3),
            dirichlet_target=np.array(d_tgt, dtype=np.float64),
            neumann=np.array(n_rows, dtype=np.float64).reshape(-1, 3),
            neumann_target=np.array(n_tgt, dtype=np.float64),
            neumann_uses_dz=np.array(n_dz, dtype=np.float64),
            n_boundary=len(edge_points),
        )


@dataclass(frozen=True)
class LossBreakdown:
    mse_f: float
    mse_b: float
    mse_u: float
    total: float


def _loss_terms(params, problem, col: Collocation, weights):
    """The three loss terms; generic so the same code runs taped or plain."""
    jf = forward_jet(params, col.interior[:, 0], col.interior[:, 1], col.interior[:, 2])
    mse_f = vmean(vsquare(pde_residual(jf, problem.c_v)))

    sq_sum = 0.0
    if col.dirichlet.shape[0]:
        ub = forward(params, col.dirichlet[:, 0], col.dirichlet[:, 1], col.dirichlet[:, 2])
        sq_sum = sq_sum + vsum(vsquare(ub - col.dirichlet_target))
    if col.neumann.shape[0]:
        jb = forward_jet(params, col.neumann[:, 0], col.neumann[:, 1], col.neumann[:, 2])
        # impervious edges constrain the normal slope: d_z on horizontal edges
        slope = col.neumann_uses_dz * jb.d_z + (1.0 - col.neumann_uses_dz) * jb.d_x
        sq_sum = sq_sum + vsum(vsquare(slope - col.neumann_target))
    mse_b = sq_sum * (1.0 / col.n_boundary)

    u0 = forward(params, col.initial[:, 0], col.initial[:, 1], col.initial[:, 2])
    mse_u = vmean(vsquare(u0 - problem.q))

    total = weights[0] * mse_f + weights[1] * mse_b + weights[2] * mse_u
    return total, mse_f, mse_b, mse_u


def compute_loss(params, problem, col: Collocation,
                 weights=(1.0, 1.0, 1.0)) -> LossBreakdown:
    total, mse_f, mse_b, mse_u = _loss_terms(params, problem, col, weights)
    return LossBreakdown(float(mse_f), float(mse_b), float(mse_u), float(total))


class HistoryRecord(NamedTuple):
    epoch: int
    mse_f: float
    mse_b: float
    mse_u: float
    total: float
    test_metric: float


TrainHistory = list  # of HistoryRecord


class TrainingDiverged(RuntimeError):
    """Raised when a loss term or gradient turns non-finite."""

    def __init__(self, epoch: int, term: str):
        super().__init__(f"non-finite {term} at epoch {epoch}")
        self.epoch = epoch
        self.term = term


def relative_l2(predicted, reference) -> float:
    """||predicted - reference||_2 / ||reference||_2 over flattened arrays."""
    p = np.asarray(predicted, dtype=np.float64).ravel()
    r = np.asarray(reference, dtype=np.float64).ravel()
    if p.shape != r.shape:
        raise ValueError("prediction and reference sizes differ")
    denom = float(np.linalg.norm(r))
    if denom == 0.0:
        raise ValueError("reference field is identically zero")
    return float(np.linalg.norm(p - r) / denom)


def _record(epoch, params, problem, col, config, test_points, test_ref) -> HistoryRecord:
    b = compute_loss(params, problem, col, config.loss_weights)
    pred = forward(params, test_points[:, 0], test_points[:, 1], test_points[:, 2])
    return HistoryRecord(epoch, b.mse_f, b.mse_b, b.mse_u, b.total,
                         relative_l2(pred, test_ref))


def train(problem: ConsolidationProblem, params: NetworkParams, config: TrainConfig,
          series_spec: SeriesSpec | None = None) -> tuple[NetworkParams, TrainHistory]:
    """Adam-train the network on fixed collocation sets.

    History is logged at epoch 0 (the untouched initial state), every
    log_every epochs, and at the last epoch; each record holds the loss
    terms at the parameters after that many updates plus the relative L2
    error against the series solution on held-out random points. A
    non-finite term or gradient raises TrainingDiverged naming the epoch.
    """
    rng = np.random.default_rng(config.seed)
    col = Collocation.draw(problem, config, rng)
    test_points = sample_interior(problem, config.n_test, rng)
    test_ref = series_solution(problem, test_points[:, 0], test_points[:, 1],
                               test_points[:, 2], series_spec)

    state = AdamState.zeros(params.n_params)
    history = [_record(0, params, problem, col, config, test_points, test_ref)]
    cell = {}

    def loss_fn(taped):
        total, mse_f, mse_b, mse_u = _loss_terms(taped, problem, col, config.loss_weights)
        cell["terms"] = (
            ("pde residual", float(mse_f)),
            ("boundary", float(mse_b)),
            ("initial", float(mse_u)),
        )
        return total

    for epoch in range(1, config.epochs + 1):
        _, grad = param_gradient(params, loss_fn)
        for name, value in cell["terms"]:
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, f"{name} loss")
        if not np.all(np.isfinite(grad)):
            raise TrainingDiverged(epoch, "gradient")
        params, state = adam_step(params, grad, state, config)
        if epoch % config.log_every == 0 or epoch == config.epochs:
            history.append(_record(epoch, params, problem, col, config,
                                   test_points, test_ref))
    return params, history
