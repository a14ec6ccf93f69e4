"""Check the network's exact derivatives against finite differences.

The solver never differentiates numerically during training: every forward
pass carries value, first, and second derivatives of the output with respect
to (x, z, t) through the layers.  This script compares those channels with
central differences on a randomly initialized network.
"""
import numpy as np

from consol2d.network import forward, forward_jet, init_glorot


def fd_channel(params, x, z, t, axis, order, h=1e-4):
    def f(dx=0.0, dz=0.0, dt=0.0):
        return forward(params, x + dx, z + dz, t + dt)

    step = {"x": {"dx": h}, "z": {"dz": h}, "t": {"dt": h}}[axis]
    plus = f(**step)
    minus = f(**{k: -v for k, v in step.items()})
    if order == 1:
        return (plus - minus) / (2 * h)
    return (plus - 2 * f() + minus) / h**2


def main():
    rng = np.random.default_rng(0)
    params = init_glorot([3, 32, 32, 32, 32, 32, 1], rng)
    x, z, t = rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 1)

    jet = forward_jet(params, x, z, t)
    exact = {
        "du/dx": jet.d_x, "du/dz": jet.d_z, "du/dt": jet.d_t,
        "d2u/dx2": jet.d_xx, "d2u/dz2": jet.d_zz,
    }
    approx = {
        "du/dx": fd_channel(params, x, z, t, "x", 1),
        "du/dz": fd_channel(params, x, z, t, "z", 1),
        "du/dt": fd_channel(params, x, z, t, "t", 1),
        "d2u/dx2": fd_channel(params, x, z, t, "x", 2),
        "d2u/dz2": fd_channel(params, x, z, t, "z", 2),
    }

    print(f"point: x={x:+.4f}  z={z:+.4f}  t={t:+.4f}")
    print(f"u = {float(jet.val):+.10f}\n")
    print(f"{'channel':>8} {'exact':>16} {'central FD':>16} {'rel gap':>10}")
    for name in exact:
        e, a = float(exact[name]), float(approx[name])
        gap = abs(e - a) / max(abs(e), 1e-12)
        print(f"{name:>8} {e:+16.10f} {a:+16.10f} {gap:10.2e}")


if __name__ == "__main__":
    main()
