"""Train a small surrogate for a minute and compare it with the series.

Uses a reduced network and epoch budget so the whole script stays fast; the
shipped configs in configs/ run the full-size training via the CLI.
"""
import numpy as np

from consol2d.network import SurrogateModel, InputScaling, init_glorot
from consol2d.oracles import series_solution
from consol2d.problem import make_top_drained
from consol2d.training import TrainConfig, train


def main():
    problem = make_top_drained(
        half_width=1.0, depth=1.0, c_v=0.01, q=5.0, t_end=1.0)
    config = TrainConfig(
        epochs=2000, n_interior=400, n_boundary=80, n_initial=80,
        n_test=400, log_every=200, seed=1)

    params = init_glorot([3, 20, 20, 20, 1], config.seed)
    print(f"{params.n_params} parameters, {config.epochs} epochs")
    params, history = train(problem, params, config)

    print(f"\n{'epoch':>6} {'pde':>10} {'boundary':>10} {'initial':>10} "
          f"{'total':>10} {'rel L2':>8}")
    for r in history:
        print(f"{r.epoch:6d} {r.mse_f:10.3e} {r.mse_b:10.3e} {r.mse_u:10.3e} "
              f"{r.total:10.3e} {r.test_metric:8.3f}")

    model = SurrogateModel(params, InputScaling())
    z = np.linspace(0.0, 1.0, 11)
    t = 0.2
    predicted = model.predict(np.zeros_like(z), z, np.full_like(z, t))
    exact = series_solution(problem, np.zeros_like(z), z, np.full_like(z, t))
    print(f"\ncenterline profile at t={t}:")
    print(f"{'z':>5} {'network':>9} {'series':>9}")
    for zi, p, e in zip(z, predicted, exact):
        print(f"{zi:5.2f} {p:9.4f} {e:9.4f}")


if __name__ == "__main__":
    main()
