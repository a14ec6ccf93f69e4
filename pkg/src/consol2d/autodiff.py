"""Reverse-mode autodiff tape and forward jet propagation.

The tape differentiates a scalar loss with respect to network parameters.
Jets carry a field value together with the input derivatives the
consolidation operator needs (du/dx, du/dz, du/dt, d2u/dx2, d2u/dz2) and
are pushed forward through affine/tanh layers in closed form, so no nested
taping is ever required.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

Scalar = Any  # float, ndarray, or Var; jet channels stay generic on purpose


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient g down to `shape`, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


class Var:
    """Node in a reverse-mode computation graph over float64 numpy arrays."""

    __slots__ = ("value", "grad", "_parents", "_vjps", "_tape")

    # Keep numpy from consuming Vars elementwise; binary ops with ndarrays
    # then fall back to the reflected methods below.
    __array_ufunc__ = None

    def __init__(self, value, parents=(), vjps=(), tape=None):
        if not (type(value) is np.ndarray and value.dtype == np.float64):
            value = np.asarray(value, dtype=np.float64)
        self.value = value
        self.grad = None
        self._parents = parents
        self._vjps = vjps
        self._tape = tape

    @property
    def shape(self):
        return self.value.shape

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"Var(shape={self.value.shape}, grad={'set' if self.grad is not None else 'unset'})"

    def __add__(self, other):
        if isinstance(other, Var):
            return _record(
                _tape_of(self, other),
                self.value + other.value,
                (self, other),
                (
                    lambda g: _unbroadcast(g, self.value.shape),
                    lambda g: _unbroadcast(g, other.value.shape),
                ),
            )
        return _record(
            self._tape,
            self.value + other,
            (self,),
            (lambda g: _unbroadcast(g, self.value.shape),),
        )

    __radd__ = __add__

    def __neg__(self):
        return _record(self._tape, -self.value, (self,), (lambda g: -g,))

    def __sub__(self, other):
        if isinstance(other, Var):
            return _record(
                _tape_of(self, other),
                self.value - other.value,
                (self, other),
                (
                    lambda g: _unbroadcast(g, self.value.shape),
                    lambda g: _unbroadcast(-g, other.value.shape),
                ),
            )
        return _record(
            self._tape,
            self.value - other,
            (self,),
            (lambda g: _unbroadcast(g, self.value.shape),),
        )

    def __rsub__(self, other):
        # other is a plain number/array
        return _record(
            self._tape,
            other - self.value,
            (self,),
            (lambda g: _unbroadcast(-g, self.value.shape),),
        )

    def __mul__(self, other):
        if isinstance(other, Var):
            return _record(
                _tape_of(self, other),
                self.value * other.value,
                (self, other),
                (
                    lambda g: _unbroadcast(g * other.value, self.value.shape),
                    lambda g: _unbroadcast(g * self.value, other.value.shape),
                ),
            )
        return _record(
            self._tape,
            self.value * other,
            (self,),
            (lambda g: _unbroadcast(g * other, self.value.shape),),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise TypeError("Var / Var is not supported; multiply by a reciprocal instead")
        return self * (1.0 / other)

    def __matmul__(self, other):
        if isinstance(other, Var):
            return _record(
                _tape_of(self, other),
                self.value @ other.value,
                (self, other),
                (
                    lambda g: g @ other.value.T,
                    lambda g: self.value.T @ g,
                ),
            )
        return _record(
            self._tape,
            self.value @ other,
            (self,),
            (lambda g: g @ other.T,),
        )

    def __rmatmul__(self, other):
        # constant matrix @ Var
        return _record(
            self._tape,
            other @ self.value,
            (self,),
            (lambda g: other.T @ g,),
        )

    def reshape(self, shape):
        return _record(
            self._tape,
            self.value.reshape(shape),
            (self,),
            (lambda g: g.reshape(self.value.shape),),
        )

    def rows(self, start, stop):
        def vjp(g):
            out = np.zeros_like(self.value)
            out[start:stop] = g
            return out

        return _record(self._tape, self.value[start:stop], (self,), (vjp,))


def _tape_of(*vs) -> "Tape | None":
    for v in vs:
        if isinstance(v, Var) and v._tape is not None:
            return v._tape
    return None


def _record(tape, value, parents, vjps) -> Var:
    v = Var(value, parents, vjps, tape)
    if tape is not None:
        tape._nodes.append(v)
    return v


class Tape:
    """Records Vars in creation order.

    Creation order is a topological order of the graph, so a single reversed
    sweep propagates adjoints from the loss back to the leaves.
    """

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes: list[Var] = []

    def leaf(self, value) -> Var:
        return _record(self, np.asarray(value, dtype=np.float64), (), ())

    def backward(self, loss: Var) -> None:
        """Fill .grad on every node reachable from `loss`. Call once per tape."""
        if loss.value.ndim != 0:
            raise ValueError("backward expects a scalar loss")
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self._nodes):
            g = node.grad
            if g is None:
                continue
            for parent, vjp in zip(node._parents, node._vjps):
                c = vjp(g)
                parent.grad = c if parent.grad is None else parent.grad + c


# Generic numeric helpers: work on floats/ndarrays directly and on Vars by
# recording the matching pullback. Network and loss code is written once
# against these and runs taped or untaped.

def vtanh(x):
    if isinstance(x, Var):
        s = np.tanh(x.value)
        return _record(x._tape, s, (x,), (lambda g: g * (1.0 - s * s),))
    return np.tanh(x)


def vsquare(x):
    if isinstance(x, Var):
        return _record(x._tape, x.value * x.value, (x,), (lambda g: g * (2.0 * x.value),))
    return x * x


def vmean(x):
    if isinstance(x, Var):
        n = x.value.size
        return _record(
            x._tape,
            np.asarray(x.value.mean()),
            (x,),
            (lambda g: np.broadcast_to(g * (1.0 / n), x.value.shape),),
        )
    return np.asarray(x, dtype=np.float64).mean()


def vsum(x):
    if isinstance(x, Var):
        return _record(
            x._tape,
            np.asarray(x.value.sum()),
            (x,),
            (lambda g: np.broadcast_to(g, x.value.shape),),
        )
    return np.asarray(x, dtype=np.float64).sum()


@dataclass(frozen=True)
class Jet:
    """A field value plus the input derivatives tracked through the network.

    Channels: value, du/dx, du/dz, du/dt, d2u/dx2, d2u/dz2. Mixed and pure
    time second derivatives are never needed by the consolidation operator,
    so they are not carried.
    """

    val: Scalar
    d_x: Scalar
    d_z: Scalar
    d_t: Scalar
    d_xx: Scalar
    d_zz: Scalar

    def channels(self) -> tuple:
        return (self.val, self.d_x, self.d_z, self.d_t, self.d_xx, self.d_zz)


def jet_constant(c) -> Jet:
    """Jet of a quantity that does not depend on (x, z, t): all derivatives zero."""
    a = np.asarray(c, dtype=np.float64)
    z = np.zeros_like(a)
    return Jet(a, z, z, z, z, z)


def jet_from_input(x, z, t) -> tuple[Jet, Jet, Jet]:
    """Seed jets for the three network inputs.

    Each input gets a unit first derivative with respect to itself and zeros
    everywhere else. Accepts scalars or equally shaped arrays.
    """
    arrs = [np.asarray(v, dtype=np.float64) for v in (x, z, t)]
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise ValueError("jet_from_input requires finite inputs")
    jets = []
    for i, a in enumerate(arrs):
        zero = np.zeros_like(a)
        one = np.ones_like(a)
        firsts = [zero, zero, zero]
        firsts[i] = one
        jets.append(Jet(a, firsts[0], firsts[1], firsts[2], zero, zero))
    return jets[0], jets[1], jets[2]


def jet_affine(weights, bias, inputs: Jet) -> Jet:
    """Push a jet through an affine layer v @ W + b.

    The trailing axis of every channel is the layer fan-in. The bias shifts
    only the value channel; derivative channels transform linearly.
    """
    j = inputs
    return Jet(
        j.val @ weights + bias,
        j.d_x @ weights,
        j.d_z @ weights,
        j.d_t @ weights,
        j.d_xx @ weights,
        j.d_zz @ weights,
    )


def jet_tanh(j: Jet) -> Jet:
    """Push a jet through elementwise tanh.

    With s = tanh(v) and p = 1 - s**2, first derivatives scale by p and the
    pure second derivatives follow d2(s) = -2 s p (dv)**2 + p d2(v).
    """
    s = vtanh(j.val)
    p = 1.0 - vsquare(s)
    w = -2.0 * (s * p)
    return Jet(
        s,
        p * j.d_x,
        p * j.d_z,
        p * j.d_t,
        w * vsquare(j.d_x) + p * j.d_xx,
        w * vsquare(j.d_z) + p * j.d_zz,
    )


# Fast path for batched jets. A batch of n jets travels as one
# (6n, width) matrix: six blocks of n rows, one per channel, in Jet field
# order. One affine op and one tanh op per layer replace ~60 elementwise
# tape nodes, which is what makes full-batch training cheap in pure numpy.
# jet_affine / jet_tanh above stay the readable reference; the two paths
# are pinned against each other in the tests.

def _val(v):
    return v.value if isinstance(v, Var) else v


def stacked_affine(S, w, b, n: int):
    """Affine layer on channel-stacked rows; bias touches only the value block."""
    sv, wv, bv = _val(S), _val(w), _val(b)
    out = sv @ wv
    out[:n] += bv
    if not (isinstance(S, Var) or isinstance(w, Var) or isinstance(b, Var)):
        return out
    parents, vjps = [], []
    if isinstance(S, Var):
        parents.append(S)
        vjps.append(lambda g: g @ wv.T)
    if isinstance(w, Var):
        parents.append(w)
        vjps.append(lambda g: sv.T @ g)
    if isinstance(b, Var):
        parents.append(b)
        vjps.append(lambda g: g[:n].sum(axis=0))
    return _record(_tape_of(S, w, b), out, tuple(parents), tuple(vjps))


def stacked_tanh(S, n: int):
    """Elementwise tanh-jet update on channel-stacked rows.

    Same mathematics as jet_tanh: with s = tanh(v), p = 1 - s**2 and
    w = -2 s p, first derivatives scale by p and second derivatives pick up
    w * (first derivative)**2.
    """
    sv = _val(S)
    m = sv.shape[1]
    r = sv.reshape(6, n, m)
    s = np.tanh(r[0])
    p = 1.0 - s * s
    w = -2.0 * s * p
    sq1 = r[1] * r[1]
    sq2 = r[2] * r[2]
    o = np.empty_like(r)
    o[0] = s
    np.multiply(p, r[1:4], out=o[1:4])
    np.multiply(w, sq1, out=o[4])
    o[4] += p * r[4]
    np.multiply(w, sq2, out=o[5])
    o[5] += p * r[5]
    out = o.reshape(6 * n, m)
    if not isinstance(S, Var):
        return out

    def vjp(g):
        gr = g.reshape(6, n, m)
        d = np.empty_like(r)
        np.multiply(gr[1:4], p, out=d[1:4])
        tw = w + w
        d[1] += gr[4] * (tw * r[1])
        d[2] += gr[5] * (tw * r[2])
        np.multiply(gr[4:6], p, out=d[4:6])
        # adjoint of the value row; note dp/dv = -2 s p = w itself
        acc = gr[1] * r[1]
        acc += gr[2] * r[2]
        acc += gr[3] * r[3]
        acc += gr[4] * r[4]
        acc += gr[5] * r[5]
        acc *= w
        dw = (4.0 - 6.0 * p) * p  # dw/dv, using s**2 = 1 - p
        acc2 = gr[4] * sq1
        acc2 += gr[5] * sq2
        acc2 *= dw
        np.multiply(gr[0], p, out=d[0])
        d[0] += acc
        d[0] += acc2
        return d.reshape(6 * n, m)

    return _record(S._tape, out, (S,), (vjp,))


class TapedParams(NamedTuple):
    """Network parameters wrapped as tape leaves.

    Mirrors the attribute layout of NetworkParams so network code accepts
    either one.
    """

    layer_sizes: tuple
    weights: tuple
    biases: tuple


def param_gradient(params, loss_fn: Callable[[TapedParams], Var]) -> tuple[float, np.ndarray]:
    """Evaluate loss_fn on taped parameters and return (loss, flat gradient).

    The gradient vector is laid out layer by layer: each weight matrix in
    row-major order, then that layer's bias. Parameters the loss never
    touches contribute exact zeros.
    """
    tape = Tape()
    ws = tuple(tape.leaf(w) for w in params.weights)
    bs = tuple(tape.leaf(b) for b in params.biases)
    loss = loss_fn(TapedParams(tuple(params.layer_sizes), ws, bs))
    if not isinstance(loss, Var) or loss.value.ndim != 0:
        raise TypeError("loss_fn must return a scalar Var built from the taped parameters")
    tape.backward(loss)
    parts = []
    for w, b in zip(ws, bs):
        parts.append(np.ravel(w.grad) if w.grad is not None else np.zeros(w.value.size))
        parts.append(b.grad if b.grad is not None else np.zeros(b.value.size))
    return float(loss.value), np.concatenate(parts)
