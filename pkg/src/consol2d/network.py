"""Fully connected tanh network mapping (x, z, t) to pore pressure.

Parameters are plain numpy arrays held in a frozen dataclass; the same
forward code runs on raw arrays and on tape Vars, which is how training
gets its gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Jet, Var, jet_from_input, stacked_affine, stacked_tanh, vtanh


def validate_layer_sizes(layer_sizes) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if sizes[0] != 3:
        raise ValueError("input layer must have 3 units: (x, z, t)")
    if sizes[-1] != 1:
        raise ValueError("output layer must have 1 unit: pore pressure")
    if any(s < 1 for s in sizes):
        raise ValueError("layer sizes must be positive")
    return sizes


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases of the fully connected network.

    weights[l] has shape (fan_in, fan_out); biases[l] has shape (fan_out,).
    The canonical flat layout (to_vector / from_vector, and gradients) is
    layer by layer, each weight matrix row-major, then its bias.
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = validate_layer_sizes(self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and one bias per layer transition")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[l], sizes[l + 1]):
                raise ValueError(f"weights[{l}] has shape {w.shape}, expected {(sizes[l], sizes[l + 1])}")
            if b.shape != (sizes[l + 1],):
                raise ValueError(f"biases[{l}] has shape {b.shape}, expected {(sizes[l + 1],)}")

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def to_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, layer_sizes, vec: np.ndarray) -> "NetworkParams":
        sizes = validate_layer_sizes(layer_sizes)
        vec = np.asarray(vec, dtype=np.float64)
        ws, bs, pos = [], [], 0
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            ws.append(vec[pos:pos + n_in * n_out].reshape(n_in, n_out).copy())
            pos += n_in * n_out
            bs.append(vec[pos:pos + n_out].copy())
            pos += n_out
        if pos != vec.size:
            raise ValueError(f"vector has {vec.size} entries, layout needs {pos}")
        return cls(sizes, tuple(ws), tuple(bs))


def init_glorot(layer_sizes, seed: int) -> NetworkParams:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    sizes = validate_layer_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        ws.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        bs.append(np.zeros(n_out))
    return NetworkParams(sizes, tuple(ws), tuple(bs))


def _as_batch(x, z, t):
    """Broadcast inputs against each other and flatten to 1-D arrays."""
    xa, za, ta = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64),
        np.asarray(z, dtype=np.float64),
        np.asarray(t, dtype=np.float64),
    )
    shape = xa.shape
    return xa.ravel(), za.ravel(), ta.ravel(), shape


def _restore(column, shape):
    # column is (n, 1); Vars stay flat 1-D (training only ever batches flat)
    if isinstance(column, Var):
        return column.reshape((-1,))
    flat = column[:, 0]
    if shape == ():
        return float(flat[0])
    return flat.reshape(shape)


def forward(params, x, z, t):
    """Network value u(x, z, t). Accepts scalars or broadcastable arrays."""
    xa, za, ta, shape = _as_batch(x, z, t)
    h = np.stack([xa, za, ta], axis=1)
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = vtanh(h @ w + b)
    out = h @ params.weights[-1] + params.biases[-1]
    return _restore(out, shape)


def forward_jet(params, x, z, t) -> Jet:
    """Network value and input derivatives at (x, z, t) in one forward pass.

    The batch travels through the layers channel-stacked: one (6n, width)
    matrix whose six n-row blocks are the jet channels in field order.
    """
    xa, za, ta, shape = _as_batch(x, z, t)
    jx, jz, jt = jet_from_input(xa, za, ta)
    n = xa.size

    def col(a, b, c):  # three (n,) input channels -> one (n, 3) block
        return np.stack([a, b, c], axis=1)

    stacked = np.concatenate([
        col(jx.val, jz.val, jt.val),
        col(jx.d_x, jz.d_x, jt.d_x),
        col(jx.d_z, jz.d_z, jt.d_z),
        col(jx.d_t, jz.d_t, jt.d_t),
        col(jx.d_xx, jz.d_xx, jt.d_xx),
        col(jx.d_zz, jz.d_zz, jt.d_zz),
    ])
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        stacked = stacked_tanh(stacked_affine(stacked, w, b, n), n)
    stacked = stacked_affine(stacked, params.weights[-1], params.biases[-1], n)

    if isinstance(stacked, Var):
        channels = [stacked.rows(i * n, (i + 1) * n) for i in range(6)]
    else:
        channels = list(stacked.reshape(6, n, 1))
    return Jet(*(_restore(ch, shape) for ch in channels))


@dataclass(frozen=True)
class InputScaling:
    """Affine map from physical coordinates to network inputs.

    scaled = (raw - offset) / scale, per axis. The identity by default.
    """

    x_offset: float = 0.0
    x_scale: float = 1.0
    z_offset: float = 0.0
    z_scale: float = 1.0
    t_offset: float = 0.0
    t_scale: float = 1.0

    def __post_init__(self):
        if min(self.x_scale, self.z_scale, self.t_scale) <= 0:
            raise ValueError("scale factors must be positive")

    @classmethod
    def to_unit(cls, geometry, time) -> "InputScaling":
        """Map x to [-1, 1], z to [0, 1], t to [0, 1] for the given domain."""
        return cls(
            x_offset=0.5 * (geometry.x_min + geometry.x_max),
            x_scale=0.5 * (geometry.x_max - geometry.x_min),
            z_offset=geometry.z_min,
            z_scale=geometry.z_max - geometry.z_min,
            t_offset=time.t_start,
            t_scale=time.t_end - time.t_start,
        )

    def apply(self, x, z, t):
        return (
            (np.asarray(x, dtype=np.float64) - self.x_offset) / self.x_scale,
            (np.asarray(z, dtype=np.float64) - self.z_offset) / self.z_scale,
            (np.asarray(t, dtype=np.float64) - self.t_offset) / self.t_scale,
        )

    def is_identity(self) -> bool:
        return self == InputScaling()


@dataclass(frozen=True)
class SurrogateModel:
    """A trained network together with the input map it was trained under.

    predict / predict_jet take physical coordinates; derivative channels are
    mapped back through the chain rule, so residuals of the physical
    equation can be evaluated directly.
    """

    params: NetworkParams
    scaling: InputScaling = field(default_factory=InputScaling)
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")

    def predict(self, x, z, t):
        return forward(self.params, *self.scaling.apply(x, z, t))

    def predict_jet(self, x, z, t) -> Jet:
        j = forward_jet(self.params, *self.scaling.apply(x, z, t))
        sx, sz, st = self.scaling.x_scale, self.scaling.z_scale, self.scaling.t_scale
        return Jet(
            j.val,
            j.d_x / sx,
            j.d_z / sz,
            j.d_t / st,
            j.d_xx / sx**2,
            j.d_zz / sz**2,
        )
