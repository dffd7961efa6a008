"""YAML experiment files.

Layout::

    experiment: table3
    field:     {kernel: cosine}             # iid | exponential (scale) | cosine
    lattice:   {bounds: [[0.0, 0.75]], points_per_dim: 40}
    bounds:    {mu: [-0.5, 0.5], sigma: [0.5, 1.0]}
    estimator: {kind: uniform, a: 1.0}      # abl09 also takes design: {sigma, mu}
    trend:     {sigma: {poly: [$sigma]}, mu: {poly: [$mu]}}
    sweep:
      mode: zip                             # zip | product
      params:
        sigma: [0.5, 0.6]
        mu: {start: 0.5, stop: 0.3, count: 2}
    run:       {b: 4.0, n: 10000, seed: 1}

A trend function is a number (constant) or ``{poly: [c0, c1, ...], center: x0}``
meaning ``sum_k c_k (t - x0)^k``. Any number inside ``trend`` may be written as
``$name`` to refer to a sweep parameter.
"""
from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .field import CovarianceModel, FunctionClassBounds, Polynomial, TrendModel
from .harness import ESTIMATORS, ExperimentConfig

BUILTIN_TARGETS = ("1", "2", "3", "4", "fig1", "fig2")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(node: dict, key: str, path: str, default=...):
    if not isinstance(node, dict):
        raise ConfigError(path, "expected a mapping")
    if key not in node:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return node[key]


def _number(value, path: str, params: dict | None = None) -> float:
    if isinstance(value, str) and value.startswith("$"):
        name = value[1:]
        if params is None or name not in params:
            raise ConfigError(path, f"unknown sweep parameter {value!r}")
        return float(params[name])
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _interval(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(path, f"expected [lower, upper], got {value!r}")
    lo, hi = (_number(v, f"{path}[{i}]") for i, v in enumerate(value))
    if lo > hi:
        raise ConfigError(path, f"lower bound {lo} exceeds upper bound {hi}")
    return lo, hi


def _function(node, path: str, params: dict | None) -> Polynomial:
    if not isinstance(node, dict):
        return Polynomial.constant(_number(node, path, params))
    coefs = _get(node, "poly", path)
    if not isinstance(coefs, list) or not coefs:
        raise ConfigError(f"{path}.poly", "expected a non-empty list of coefficients")
    values = tuple(_number(c, f"{path}.poly[{i}]", params) for i, c in enumerate(coefs))
    center = _number(node.get("center", 0.0), f"{path}.center", params)
    axis = int(node.get("axis", 0))
    return Polynomial(values, center=center, axis=axis)


def _trend(node, path: str, params: dict | None, bounds=None) -> TrendModel:
    mu = _function(_get(node, "mu", path, 0.0), f"{path}.mu", params)
    sigma = _function(_get(node, "sigma", path), f"{path}.sigma", params)
    return TrendModel(mu, sigma, bounds, dict(params or {}))


def _grid(value, path: str) -> list[float]:
    if isinstance(value, dict):
        start = _number(_get(value, "start", path), f"{path}.start")
        stop = _number(_get(value, "stop", path), f"{path}.stop")
        count = _get(value, "count", path)
        if not isinstance(count, int) or count < 0:
            raise ConfigError(f"{path}.count", f"expected a non-negative integer, got {count!r}")
        return [float(x) for x in np.linspace(start, stop, count)]
    if isinstance(value, list):
        return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return [_number(value, path)]


def _sweep_points(node, path: str) -> tuple[tuple[str, ...], list[dict]]:
    if node is None:
        return (), [{}]
    mode = node.get("mode", "product")
    params = _get(node, "params", path)
    if not isinstance(params, dict):
        raise ConfigError(f"{path}.params", "expected a mapping of parameter grids")
    names = tuple(params)
    grids = [_grid(params[k], f"{path}.params.{k}") for k in names]
    if mode == "zip":
        if len({len(g) for g in grids}) > 1:
            raise ConfigError(f"{path}.params", "zip mode needs grids of equal length")
        combos = list(zip(*grids))
    elif mode == "product":
        combos = list(itertools.product(*grids))
    else:
        raise ConfigError(f"{path}.mode", f"expected 'zip' or 'product', got {mode!r}")
    return names, [dict(zip(names, c)) for c in combos]


def _covariance(node, path: str) -> CovarianceModel:
    kernel = _get(node, "kernel", path)
    if kernel == "iid":
        return CovarianceModel.iid()
    if kernel == "cosine":
        return CovarianceModel.cosine()
    if kernel == "exponential":
        scale = _number(node.get("scale", 1.0), f"{path}.scale")
        if scale <= 0:
            raise ConfigError(f"{path}.scale", "must be positive")
        return CovarianceModel.exponential(scale)
    if kernel == "explicit":
        return CovarianceModel.explicit(_get(node, "matrix", path))
    raise ConfigError(f"{path}.kernel", f"unknown kernel {kernel!r}")


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a mapping")
    field_node = _get(doc, "field", "")
    lattice = _get(doc, "lattice", "")
    raw_bounds = _get(lattice, "bounds", "lattice")
    if raw_bounds and not isinstance(raw_bounds[0], (list, tuple)):
        raw_bounds = [raw_bounds]
    lattice_bounds = tuple(_interval(b, f"lattice.bounds[{i}]") for i, b in enumerate(raw_bounds))
    ppd = _get(lattice, "points_per_dim", "lattice")
    if not isinstance(ppd, int) or ppd < 1:
        raise ConfigError("lattice.points_per_dim", f"expected a positive integer, got {ppd!r}")

    bnode = _get(doc, "bounds", "")
    mu_l, mu_u = _interval(_get(bnode, "mu", "bounds"), "bounds.mu")
    sigma_l, sigma_u = _interval(_get(bnode, "sigma", "bounds"), "bounds.sigma")
    if sigma_l <= 0:
        raise ConfigError("bounds.sigma[0]", f"sigma_l must be positive, got {sigma_l}")
    bounds = FunctionClassBounds(mu_l, mu_u, sigma_l, sigma_u,
                                 holder_exponent=float(bnode.get("holder_exponent", 1.0)),
                                 holder_const=float(bnode.get("holder_const", 1.0)))

    est = _get(doc, "estimator", "")
    kind = _get(est, "kind", "estimator")
    if kind not in ESTIMATORS:
        raise ConfigError("estimator.kind", f"expected one of {ESTIMATORS}, got {kind!r}")
    a = _number(est.get("a", 1.0), "estimator.a")
    if a <= 0:
        raise ConfigError("estimator.a", "must be positive")
    design = None
    if kind == "abl09":
        design = _trend(_get(est, "design", "estimator"), "estimator.design", None)

    names, points = _sweep_points(doc.get("sweep"), "sweep")
    tnode = _get(doc, "trend", "")
    trends = [_trend(tnode, "trend", p, bounds) for p in points] if points else []

    run = _get(doc, "run", "")
    b = _number(_get(run, "b", "run"), "run.b")
    n = _get(run, "n", "run")
    if not isinstance(n, int) or n < 1:
        raise ConfigError("run.n", f"expected a positive integer, got {n!r}")
    seed = _get(run, "seed", "run", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("run.seed", f"expected a non-negative integer, got {seed!r}")

    return ExperimentConfig(
        experiment=str(doc.get("experiment", "experiment")),
        covariance=_covariance(field_node, "field"),
        lattice_bounds=lattice_bounds,
        points_per_dim=ppd,
        bounds=bounds,
        trends=trends,
        b=b,
        n=n,
        seed=seed,
        estimator=kind,
        a=a,
        design=design,
        param_names=names,
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"not valid YAML: {exc}") from None
    return parse_config(doc)


def builtin_config(target: str) -> ExperimentConfig:
    """Built-in experiment config for one reproduction target."""
    target = str(target).removeprefix("table")
    if target not in BUILTIN_TARGETS:
        raise ValueError(f"unknown reproduction target {target!r}; expected one of {BUILTIN_TARGETS}")
    name = f"fig{target[3:]}.yaml" if target.startswith("fig") else f"table{target}.yaml"
    text = resources.files("uniform_extremes.configs").joinpath(name).read_text()
    return parse_config(yaml.safe_load(text))


def builtin_config_path(target: str) -> Path:
    name = f"{target}.yaml" if target.startswith("fig") else f"table{target}.yaml"
    return Path(str(resources.files("uniform_extremes.configs").joinpath(name)))
