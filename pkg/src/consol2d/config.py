"""YAML run configuration with path-qualified validation errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any

import yaml

from .problem import ConsolidationProblem, make_top_drained, problem_from_bounds
from .training import TrainConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_MISSING = object()


def _coerce_float(v) -> float | None:
    """Number, or a string such as '1.0e6' that YAML 1.1 fails to resolve."""
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, float)):
        v = float(v)
    elif isinstance(v, str):
        try:
            v = float(v)
        except ValueError:
            return None
    else:
        return None
    return v if math.isfinite(v) else None


def _section(doc: dict, name: str, required: bool = False) -> dict:
    block = doc.get(name, _MISSING)
    if block is _MISSING:
        if required:
            raise ConfigError(name, "missing required section")
        return {}
    if not isinstance(block, dict):
        raise ConfigError(name, "must be a mapping")
    return block


def _reject_unknown(block: dict, ctx: str, known) -> None:
    for key in block:
        if key not in known:
            raise ConfigError(f"{ctx}{key}", "unknown field")


def _fetch(block: dict, key: str, ctx: str, kind: str, default: Any = _MISSING) -> Any:
    if key not in block:
        if default is _MISSING:
            raise ConfigError(f"{ctx}{key}", "missing required field")
        return default
    v = block[key]
    path = f"{ctx}{key}"
    if kind == "float":
        v = _coerce_float(v)
        if v is None:
            raise ConfigError(path, f"expected a number, got {block[key]!r}")
        return v
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(path, f"expected an integer, got {v!r}")
        return v
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(path, f"expected true/false, got {v!r}")
        return v
    if kind == "str":
        if not isinstance(v, str):
            raise ConfigError(path, f"expected a string, got {v!r}")
        return v
    if kind == "floatlist":
        if isinstance(v, (list, tuple)) and v:
            coerced = tuple(_coerce_float(e) for e in v)
            if None not in coerced:
                return coerced
        raise ConfigError(path, f"expected a nonempty list of numbers, got {v!r}")
    raise AssertionError(kind)


def _load_yaml(path) -> dict:
    with open(path) as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError("", f"{path} is not valid YAML ({e})") from None
    if not isinstance(doc, dict):
        raise ConfigError("", f"{path} must hold a mapping at the top level")
    return doc


def _attribute(ctx: str, keys, message: str) -> ConfigError:
    """Point a constructor complaint at the first config key it mentions."""
    for key in keys:
        if key in message:
            return ConfigError(ctx + key, message)
    return ConfigError(ctx.rstrip("."), message)


_TRAINING_KEYS = (
    "epochs", "learning_rate", "beta1", "beta2", "epsilon", "n_interior",
    "n_boundary", "n_initial", "n_test", "seed", "log_every", "loss_weights",
)


def _parse_training(doc: dict) -> TrainConfig:
    block = _section(doc, "training")
    ctx = "training."
    defaults = TrainConfig()
    _reject_unknown(block, ctx, _TRAINING_KEYS)
    weights = _fetch(block, "loss_weights", ctx, "floatlist", defaults.loss_weights)
    if len(weights) != 3:
        raise ConfigError(ctx + "loss_weights", "expected three weights (pde, boundary, initial)")
    try:
        return TrainConfig(
            epochs=_fetch(block, "epochs", ctx, "int", defaults.epochs),
            learning_rate=_fetch(block, "learning_rate", ctx, "float", defaults.learning_rate),
            beta1=_fetch(block, "beta1", ctx, "float", defaults.beta1),
            beta2=_fetch(block, "beta2", ctx, "float", defaults.beta2),
            epsilon=_fetch(block, "epsilon", ctx, "float", defaults.epsilon),
            n_interior=_fetch(block, "n_interior", ctx, "int", defaults.n_interior),
            n_boundary=_fetch(block, "n_boundary", ctx, "int", defaults.n_boundary),
            n_initial=_fetch(block, "n_initial", ctx, "int", defaults.n_initial),
            n_test=_fetch(block, "n_test", ctx, "int", defaults.n_test),
            seed=_fetch(block, "seed", ctx, "int", defaults.seed),
            log_every=_fetch(block, "log_every", ctx, "int", defaults.log_every),
            loss_weights=weights,
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise _attribute(ctx, _TRAINING_KEYS, str(e)) from None


def _parse_network(doc: dict) -> tuple[int, int, str, bool]:
    block = _section(doc, "network")
    ctx = "network."
    _reject_unknown(block, ctx, ("hidden_layers", "width", "activation", "rescale_inputs"))
    hidden = _fetch(block, "hidden_layers", ctx, "int", 5)
    width = _fetch(block, "width", ctx, "int", 32)
    activation = _fetch(block, "activation", ctx, "str", "tanh")
    rescale = _fetch(block, "rescale_inputs", ctx, "bool", False)
    if hidden < 1 or width < 1:
        raise ConfigError("network", "hidden_layers and width must be positive")
    if activation != "tanh":
        raise ConfigError(ctx + "activation", f"only tanh is supported, got {activation!r}")
    return hidden, width, activation, rescale


@dataclass(frozen=True)
class RunConfig:
    """Everything one training / oracle / comparison run needs."""

    problem: ConsolidationProblem
    hidden_layers: int
    width: int
    activation: str
    rescale_inputs: bool
    training: TrainConfig
    grid_nx: int
    grid_nz: int
    snapshot_times: tuple[float, ...]
    n_test: int
    series_terms: int

    def layer_sizes(self) -> tuple[int, ...]:
        return (3, *([self.width] * self.hidden_layers), 1)

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        return replace(self, training=replace(self.training, seed=seed))


def parse_config(path) -> RunConfig:
    """Load and validate a run configuration; raises ConfigError on bad input."""
    doc = _load_yaml(path)
    _reject_unknown(doc, "", ("problem", "network", "training", "evaluation"))

    pb = _section(doc, "problem", required=True)
    ctx = "problem."
    _reject_unknown(pb, ctx, (
        "x_min", "x_max", "z_min", "z_max", "t0", "t1", "c_v", "q",
        "drainage_mode", "lateral_drained",
    ))
    if "c_v" in pb and isinstance(pb["c_v"], (list, tuple)):
        c_v: Any = _fetch(pb, "c_v", ctx, "floatlist")
        if len(c_v) != 2:
            raise ConfigError(ctx + "c_v", "expected one coefficient or a [c_x, c_z] pair")
    else:
        c_v = _fetch(pb, "c_v", ctx, "float")
    if any(c <= 0 for c in (c_v if isinstance(c_v, tuple) else (c_v,))):
        raise ConfigError(ctx + "c_v", "coefficients must be positive")
    q = _fetch(pb, "q", ctx, "float")
    if q < 0:
        raise ConfigError(ctx + "q", "initial excess pressure must be nonnegative")
    try:
        problem = problem_from_bounds(
            x_min=_fetch(pb, "x_min", ctx, "float"),
            x_max=_fetch(pb, "x_max", ctx, "float"),
            z_min=_fetch(pb, "z_min", ctx, "float"),
            z_max=_fetch(pb, "z_max", ctx, "float"),
            t_start=_fetch(pb, "t0", ctx, "float", 0.0),
            t_end=_fetch(pb, "t1", ctx, "float"),
            c_v=c_v,
            q=q,
            drainage=_fetch(pb, "drainage_mode", ctx, "str", "top"),
            lateral_drained=_fetch(pb, "lateral_drained", ctx, "bool", True),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise _attribute(ctx, ("x_min", "x_max", "z_min", "z_max", "t0", "t1",
                               "drainage_mode"), str(e)) from None

    hidden, width, activation, rescale = _parse_network(doc)
    training = _parse_training(doc)

    ev = _section(doc, "evaluation")
    ctx = "evaluation."
    _reject_unknown(ev, ctx, ("grid_nx", "grid_nz", "snapshot_times", "n_test", "series_terms"))
    grid_nx = _fetch(ev, "grid_nx", ctx, "int", 101)
    grid_nz = _fetch(ev, "grid_nz", ctx, "int", 51)
    times = _fetch(ev, "snapshot_times", ctx, "floatlist", (problem.time.t_end,))
    n_test = _fetch(ev, "n_test", ctx, "int", training.n_test)
    series_terms = _fetch(ev, "series_terms", ctx, "int", 199)
    if grid_nx < 3 or grid_nz < 3:
        raise ConfigError("evaluation", "grids need at least 3 nodes per axis")
    if n_test < 1:
        raise ConfigError(ctx + "n_test", "must be positive")
    if series_terms < 1 or series_terms % 2 == 0:
        raise ConfigError(ctx + "series_terms", "must be a positive odd integer")
    if any(t < problem.time.t_start or t > problem.time.t_end for t in times):
        raise ConfigError(ctx + "snapshot_times", "times must lie in [t0, t1]")

    return RunConfig(
        problem=problem,
        hidden_layers=hidden,
        width=width,
        activation=activation,
        rescale_inputs=rescale,
        training=training,
        grid_nx=grid_nx,
        grid_nz=grid_nz,
        snapshot_times=tuple(times),
        n_test=n_test,
        series_terms=series_terms,
    )


@dataclass(frozen=True)
class SoilLayer:
    name: str
    thickness: float
    c_v: float

    def __post_init__(self):
        if self.thickness <= 0 or self.c_v <= 0:
            raise ValueError(f"layer {self.name!r}: thickness and c_v must be positive")


@dataclass(frozen=True)
class CaseStudyConfig:
    """A stack of layers under a shared surcharge, each trained separately."""

    u0: float
    half_width: float
    layers: tuple[SoilLayer, ...]
    snapshot_times: tuple[float, ...]
    hidden_layers: int
    width: int
    training: TrainConfig
    grid_nx: int
    grid_nz: int
    series_terms: int

    @property
    def depth(self) -> float:
        return sum(l.thickness for l in self.layers)

    @property
    def t_end(self) -> float:
        return max(self.snapshot_times)

    def layer_sizes(self) -> tuple[int, ...]:
        return (3, *([self.width] * self.hidden_layers), 1)

    def interfaces(self) -> list[float]:
        """Depths of the internal layer boundaries (excludes surface and base)."""
        edges, z = [], 0.0
        for layer in self.layers[:-1]:
            z += layer.thickness
            edges.append(z)
        return edges

    def problem_for(self, layer: SoilLayer) -> ConsolidationProblem:
        """Layer models share the full column geometry; only c_v changes."""
        return make_top_drained(self.half_width, self.depth, layer.c_v,
                                self.u0, self.t_end, lateral_drained=True)

    def with_seed(self, seed: int | None) -> "CaseStudyConfig":
        if seed is None:
            return self
        return replace(self, training=replace(self.training, seed=seed))


def parse_case_study_config(path) -> CaseStudyConfig:
    doc = _load_yaml(path)
    _reject_unknown(doc, "", ("site", "network", "training", "evaluation"))

    sb = _section(doc, "site", required=True)
    ctx = "site."
    _reject_unknown(sb, ctx, ("u0", "half_width", "layers", "snapshot_times"))
    u0 = _fetch(sb, "u0", ctx, "float")
    half_width = _fetch(sb, "half_width", ctx, "float")
    times = _fetch(sb, "snapshot_times", ctx, "floatlist")
    if u0 <= 0 or half_width <= 0:
        raise ConfigError("site", "u0 and half_width must be positive")
    if any(t < 0 for t in times):
        raise ConfigError(ctx + "snapshot_times", "times must be nonnegative")
    if max(times) <= 0:
        raise ConfigError(ctx + "snapshot_times", "need a positive final time")

    raw_layers = sb.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ConfigError(ctx + "layers", "expected a nonempty list of layers")
    layers = []
    for i, item in enumerate(raw_layers):
        lctx = f"{ctx}layers[{i}]."
        if not isinstance(item, dict):
            raise ConfigError(lctx[:-1], "each layer must be a mapping")
        _reject_unknown(item, lctx, ("name", "thickness", "c_v"))
        try:
            layers.append(SoilLayer(
                name=_fetch(item, "name", lctx, "str", f"layer{i + 1}"),
                thickness=_fetch(item, "thickness", lctx, "float"),
                c_v=_fetch(item, "c_v", lctx, "float"),
            ))
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(lctx[:-1], str(e)) from None

    hidden, width, _, _ = _parse_network(doc)
    training = _parse_training(doc)

    ev = _section(doc, "evaluation")
    ctx = "evaluation."
    _reject_unknown(ev, ctx, ("grid_nx", "grid_nz", "series_terms"))
    grid_nx = _fetch(ev, "grid_nx", ctx, "int", 147)
    grid_nz = _fetch(ev, "grid_nz", ctx, "int", 101)
    series_terms = _fetch(ev, "series_terms", ctx, "int", 199)
    if grid_nx < 3 or grid_nz < 3:
        raise ConfigError("evaluation", "grids need at least 3 nodes per axis")
    if series_terms < 1 or series_terms % 2 == 0:
        raise ConfigError(ctx + "series_terms", "must be a positive odd integer")

    return CaseStudyConfig(
        u0=u0,
        half_width=half_width,
        layers=tuple(layers),
        snapshot_times=tuple(times),
        hidden_layers=hidden,
        width=width,
        training=training,
        grid_nx=grid_nx,
        grid_nz=grid_nz,
        series_terms=series_terms,
    )
