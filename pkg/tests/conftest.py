"""Shared finite-difference oracles and random-network helpers.

The derivative tests never trust the jet code to check itself: every
derivative is compared against central differences of plain `forward`
evaluations, and every gradient against parameter-wise differences of the
loss value.
"""
import numpy as np
import pytest

from consol2d.network import NetworkParams, forward, init_glorot


def random_params(rng, layer_sizes=None) -> NetworkParams:
    """A random network; layer layout is drawn if not given."""
    if layer_sizes is None:
        depth = int(rng.integers(1, 4))
        width = int(rng.integers(4, 13))
        layer_sizes = (3, *([width] * depth), 1)
    base = init_glorot(layer_sizes, int(rng.integers(0, 2**31)))
    # nonzero biases so bias gradients are exercised too
    vec = base.to_vector() + 0.1 * rng.standard_normal(base.n_params)
    return NetworkParams.from_vector(layer_sizes, vec)


def fd_jet_channels(params, x, z, t, h=1e-4):
    """Central-difference estimates of all six jet channels of forward()."""
    u = forward(params, x, z, t)
    d_x = (forward(params, x + h, z, t) - forward(params, x - h, z, t)) / (2 * h)
    d_z = (forward(params, x, z + h, t) - forward(params, x, z - h, t)) / (2 * h)
    d_t = (forward(params, x, z, t + h) - forward(params, x, z, t - h)) / (2 * h)
    d_xx = (forward(params, x + h, z, t) - 2 * u + forward(params, x - h, z, t)) / h**2
    d_zz = (forward(params, x, z + h, t) - 2 * u + forward(params, x, z - h, t)) / h**2
    return u, d_x, d_z, d_t, d_xx, d_zz


def fd_param_gradient(params, scalar_of_params, h=1e-5) -> np.ndarray:
    """Parameter-wise central differences of a scalar function of the params."""
    vec = params.to_vector()
    out = np.empty_like(vec)
    for i in range(vec.size):
        vp, vm = vec.copy(), vec.copy()
        vp[i] += h
        vm[i] -= h
        fp = scalar_of_params(NetworkParams.from_vector(params.layer_sizes, vp))
        fm = scalar_of_params(NetworkParams.from_vector(params.layer_sizes, vm))
        out[i] = (fp - fm) / (2 * h)
    return out


def assert_close(got, want, rtol, atol=1e-9):
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    gap = np.abs(got - want)
    bound = rtol * np.abs(want) + atol
    worst = np.argmax(gap - bound)
    assert np.all(gap <= bound), (
        f"mismatch at flat index {worst}: got {got.ravel()[worst]!r}, "
        f"want {want.ravel()[worst]!r}"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
