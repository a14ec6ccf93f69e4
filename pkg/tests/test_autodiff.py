"""Tape gradients and jet propagation against finite-difference oracles."""
import numpy as np
import pytest

from consol2d.autodiff import (
    Jet,
    Tape,
    Var,
    jet_affine,
    jet_constant,
    jet_from_input,
    jet_tanh,
    param_gradient,
    stacked_affine,
    stacked_tanh,
    vmean,
    vsquare,
    vsum,
    vtanh,
)
from consol2d.network import forward_jet, init_glorot

from conftest import assert_close, random_params


# ---------------------------------------------------------------- tape basics

def test_add_mul_gradients_match_hand_results():
    tape = Tape()
    a = tape.leaf(np.array([1.0, 2.0]))
    b = tape.leaf(np.array([3.0, 4.0]))
    loss = vsum(a * b + a)
    tape.backward(loss)
    assert np.array_equal(a.grad, np.array([4.0, 5.0]))  # b + 1
    assert np.array_equal(b.grad, np.array([1.0, 2.0]))  # a


def test_binary_ops_with_plain_arrays_and_scalars():
    tape = Tape()
    a = tape.leaf(np.array([2.0, -1.0]))
    loss = vsum(3.0 * a - np.array([1.0, 1.0]) + (1.0 - a) + a / 2.0)
    tape.backward(loss)
    assert np.allclose(a.grad, 3.0 - 1.0 + 0.5)


def test_numpy_array_times_var_falls_back_to_var_ops():
    tape = Tape()
    a = tape.leaf(np.array([1.0, 2.0]))
    out = np.array([2.0, 3.0]) * a  # ndarray.__mul__ must yield to Var.__rmul__
    assert isinstance(out, Var)
    tape.backward(vsum(out))
    assert np.array_equal(a.grad, np.array([2.0, 3.0]))


def test_matmul_gradients():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 3))
    tape = Tape()
    w = tape.leaf(rng.standard_normal((3, 2)))
    loss = vsum(vsquare(A @ w))
    tape.backward(loss)
    want = 2.0 * A.T @ (A @ w.value)
    assert np.allclose(w.grad, want, rtol=0, atol=1e-14)


def test_broadcast_bias_gradient_is_summed():
    tape = Tape()
    h = tape.leaf(np.zeros((5, 3)))
    b = tape.leaf(np.array([1.0, 2.0, 3.0]))
    loss = vsum(vsquare(h + b))
    tape.backward(loss)
    assert np.allclose(b.grad, 2.0 * 5 * b.value)
    assert b.grad.shape == (3,)


def test_mean_and_square_and_tanh_pullbacks():
    tape = Tape()
    x = tape.leaf(np.array([0.3, -0.7, 1.1]))
    loss = vmean(vsquare(vtanh(x)))
    tape.backward(loss)
    s = np.tanh(x.value)
    want = 2.0 * s * (1.0 - s**2) / 3.0
    assert np.allclose(x.grad, want, rtol=1e-15)


def test_var_value_coerced_to_float64():
    v = Var(np.array([1, 2], dtype=np.int32))
    assert v.value.dtype == np.float64
    assert float(Var(2.5)) == 2.5


def test_backward_rejects_nonscalar_loss():
    tape = Tape()
    a = tape.leaf(np.ones(3))
    with pytest.raises(ValueError):
        tape.backward(a * 2.0)


def test_var_division_by_var_is_refused():
    tape = Tape()
    a, b = tape.leaf(np.ones(2)), tape.leaf(np.ones(2))
    with pytest.raises(TypeError):
        a / b


def test_rows_scatter_gradient():
    tape = Tape()
    a = tape.leaf(np.arange(6.0).reshape(6, 1))
    loss = vsum(a.rows(2, 4) * 3.0)
    tape.backward(loss)
    want = np.zeros((6, 1))
    want[2:4] = 3.0
    assert np.array_equal(a.grad, want)


def test_untouched_parameters_get_exact_zero_gradient():
    params = init_glorot((3, 4, 1), seed=0)

    def loss_fn(taped):
        return vsum(vsquare(taped.weights[0]))

    _, grad = param_gradient(params, loss_fn)
    n_w0 = params.weights[0].size
    assert np.array_equal(grad[:n_w0], 2.0 * params.weights[0].ravel())
    assert np.all(grad[n_w0:] == 0.0)  # bitwise zeros, not merely small


def test_param_gradient_requires_scalar_var():
    params = init_glorot((3, 4, 1), seed=0)
    with pytest.raises(TypeError):
        param_gradient(params, lambda taped: 1.0)


# ----------------------------------------------------------------------- jets

def test_input_jets_are_unit_seeds():
    jx, jz, jt = jet_from_input(1.0, 2.0, 3.0)
    assert (float(jx.val), float(jz.val), float(jt.val)) == (1.0, 2.0, 3.0)
    assert float(jx.d_x) == 1.0 and float(jx.d_z) == 0.0 and float(jx.d_t) == 0.0
    assert float(jz.d_z) == 1.0 and float(jt.d_t) == 1.0
    for j in (jx, jz, jt):
        assert float(j.d_xx) == 0.0 and float(j.d_zz) == 0.0


def test_input_jets_reject_nonfinite():
    with pytest.raises(ValueError):
        jet_from_input(np.nan, 0.0, 0.0)
    with pytest.raises(ValueError):
        jet_from_input(0.0, np.inf, 0.0)


def test_tanh_jet_hand_value():
    j = Jet(np.array(1.0), np.array(2.0), np.array(0.0),
            np.array(0.0), np.array(3.0), np.array(0.0))
    out = jet_tanh(j)
    assert abs(float(out.val) - 0.761594) < 1e-5
    assert abs(float(out.d_x) - 0.839949) < 1e-5
    assert abs(float(out.d_xx) - (-1.298878)) < 1e-5
    # and the exact chain-rule values, not only the rounded ones
    s = np.tanh(1.0)
    p = 1.0 - s * s
    assert abs(float(out.d_xx) - (-2 * s * p * 4.0 + p * 3.0)) < 1e-15


def test_affine_jet_is_linear_in_the_jet():
    rng = np.random.default_rng(11)
    w = rng.standard_normal((4, 3))
    zero_b = np.zeros(3)
    for _ in range(20):
        a, b = rng.standard_normal(2)
        j1 = Jet(*(rng.standard_normal((2, 4)) for _ in range(6)))
        j2 = Jet(*(rng.standard_normal((2, 4)) for _ in range(6)))
        mixed = Jet(*(a * c1 + b * c2 for c1, c2 in zip(j1.channels(), j2.channels())))
        lhs = jet_affine(w, zero_b, mixed)
        rhs_1 = jet_affine(w, zero_b, j1)
        rhs_2 = jet_affine(w, zero_b, j2)
        for lc, r1, r2 in zip(lhs.channels(), rhs_1.channels(), rhs_2.channels()):
            assert np.allclose(lc, a * r1 + b * r2, rtol=1e-12, atol=1e-12)


def test_constant_jets_never_grow_derivatives():
    rng = np.random.default_rng(7)
    j = jet_constant(rng.standard_normal((5, 3)))
    for w, b in (((rng.standard_normal((3, 4))), rng.standard_normal(4)),
                 ((rng.standard_normal((4, 2))), rng.standard_normal(2))):
        j = jet_tanh(jet_affine(w, b, j))
    for channel in (j.d_x, j.d_z, j.d_t, j.d_xx, j.d_zz):
        assert np.all(channel == 0.0)  # exact zeros


def test_affine_bias_shifts_value_channel_only():
    j = jet_constant(np.zeros((2, 3)))
    out = jet_affine(np.zeros((3, 2)), np.array([5.0, -1.0]), j)
    assert np.array_equal(out.val, np.tile([5.0, -1.0], (2, 1)))
    assert np.all(out.d_x == 0.0)


# ------------------------------------------------- fused stacked fast path

def _reference_forward_jet(params, x, z, t) -> Jet:
    """forward_jet recomputed with the per-channel reference ops."""
    jx, jz, jt = jet_from_input(x, z, t)
    j = Jet(*(np.stack([a, b, c], axis=1)
              for a, b, c in zip(jx.channels(), jz.channels(), jt.channels())))
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        j = jet_tanh(jet_affine(w, b, j))
    j = jet_affine(params.weights[-1], params.biases[-1], j)
    return Jet(*(c[:, 0] for c in j.channels()))


def test_fused_path_matches_reference_ops(rng):
    for _ in range(5):
        params = random_params(rng)
        x, z, t = (rng.uniform(-1, 1, 7) for _ in range(3))
        fused = forward_jet(params, x, z, t)
        ref = _reference_forward_jet(params, x, z, t)
        for f, r in zip(fused.channels(), ref.channels()):
            assert_close(f, r, rtol=1e-12, atol=1e-13)


def test_fused_and_reference_gradients_agree(rng):
    params = random_params(rng, (3, 6, 6, 1))
    x, z, t = (rng.uniform(-1, 1, 5) for _ in range(3))

    def fused_loss(taped):
        j = forward_jet(taped, x, z, t)
        return vmean(vsquare(j.d_t - j.d_xx - j.d_zz + j.val))

    def reference_loss(taped):
        jx, jz, jt = jet_from_input(x, z, t)
        j = Jet(*(np.stack([a, b, c], axis=1)
                  for a, b, c in zip(jx.channels(), jz.channels(), jt.channels())))
        for w, b in zip(taped.weights[:-1], taped.biases[:-1]):
            j = jet_tanh(jet_affine(w, b, j))
        j = jet_affine(taped.weights[-1], taped.biases[-1], j)
        r = (j.d_t - j.d_xx - j.d_zz + j.val).reshape((-1,))
        return vmean(vsquare(r))

    loss_a, grad_a = param_gradient(params, fused_loss)
    loss_b, grad_b = param_gradient(params, reference_loss)
    assert abs(loss_a - loss_b) <= 1e-12 * max(1.0, abs(loss_b))
    assert_close(grad_a, grad_b, rtol=1e-11, atol=1e-13)


def test_stacked_ops_without_vars_return_plain_arrays(rng):
    S = rng.standard_normal((12, 4))  # n = 2
    w, b = rng.standard_normal((4, 3)), rng.standard_normal(3)
    out = stacked_tanh(stacked_affine(S, w, b, 2), 2)
    assert isinstance(out, np.ndarray)
    assert out.shape == (12, 3)


def test_stacked_affine_gradient_matches_dense_formula(rng):
    n = 3
    S0 = rng.standard_normal((6 * n, 4))
    tape = Tape()
    w = tape.leaf(rng.standard_normal((4, 2)))
    b = tape.leaf(rng.standard_normal(2))
    out = stacked_affine(S0, w, b, n)
    tape.backward(vsum(vsquare(out)))
    g = 2.0 * out.value
    assert np.allclose(w.grad, S0.T @ g, rtol=1e-13)
    assert np.allclose(b.grad, g[:n].sum(axis=0), rtol=1e-13)


# -------------------------------------------------- finite-difference oracles

def test_jet_matches_finite_differences_of_value(rng):
    from conftest import fd_jet_channels

    for _ in range(10):
        params = random_params(rng)
        x, z, t = (rng.uniform(-1, 1, 6) for _ in range(3))
        jet = forward_jet(params, x, z, t)
        u, d_x, d_z, d_t, d_xx, d_zz = fd_jet_channels(params, x, z, t)
        assert_close(jet.val, u, rtol=1e-12, atol=1e-12)
        assert_close(jet.d_x, d_x, rtol=1e-6)
        assert_close(jet.d_z, d_z, rtol=1e-6)
        assert_close(jet.d_t, d_t, rtol=1e-6)
        assert_close(jet.d_xx, d_xx, rtol=1e-5, atol=1e-6)
        assert_close(jet.d_zz, d_zz, rtol=1e-5, atol=1e-6)


def test_param_gradient_matches_finite_differences(rng):
    from conftest import fd_param_gradient
    from consol2d.network import forward

    params = random_params(rng, (3, 5, 4, 1))
    x, z, t = (rng.uniform(-1, 1, 4) for _ in range(3))

    def loss_fn(p):
        j = forward_jet(p, x, z, t)
        total = vmean(vsquare(j.d_t - 0.3 * j.d_xx - 0.7 * j.d_zz))
        return total + vmean(vsquare(forward(p, x, z, t) - 1.0))

    loss, grad = param_gradient(params, loss_fn)
    fd = fd_param_gradient(params, lambda p: float(loss_fn_plain(p, x, z, t)))
    assert_close(grad, fd, rtol=1e-6, atol=1e-9)
    assert loss >= 0.0


def loss_fn_plain(p, x, z, t):
    from consol2d.network import forward

    j = forward_jet(p, x, z, t)
    total = np.mean((j.d_t - 0.3 * j.d_xx - 0.7 * j.d_zz) ** 2)
    return total + np.mean((forward(p, x, z, t) - 1.0) ** 2)
