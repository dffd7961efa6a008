"""Replication driver: reproducible streams, parallel sampling, summaries, sweeps."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Sequence

import numpy as np

from .baseline import DesignMeasure, sample_under_q_dagger, weights_from_counts
from .field import (
    CovarianceModel,
    DiscretizedField,
    FunctionClassBounds,
    Polynomial,
    TrendModel,
    build_lattice,
    sample_field,
)
from .oracles import oracle_cosine, oracle_iid_max
from .summary import EstimateSummary
from .uniform_is import MixturePriors, SampleSet, evaluate_many_trends, q_weights, sample_under_q

log = logging.getLogger(__name__)

WORKERS_ENV = "UNIFORM_EXTREMES_WORKERS"
ESTIMATORS = ("naive", "abl09", "uniform")
_MASK64 = (1 << 64) - 1


def derive_stream(seed: int, replicate_index: int) -> np.random.Generator:
    """Independent generator for one replicate.

    Philox is counter based; the 128-bit key is (replicate_index, seed), so a
    stream depends only on those two integers and not on scheduling.
    """
    if replicate_index < 0:
        raise ValueError("replicate_index must be non-negative")
    key = (int(seed) & _MASK64) | ((int(replicate_index) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _draw_chunk(kind: str, field: DiscretizedField, spec, seed: int, start: int, stop: int):
    paths = np.empty((stop - start, field.size))
    for j, i in enumerate(range(start, stop)):
        rng = derive_stream(seed, i)
        if kind == "uniform":
            paths[j] = sample_under_q(field, spec, rng).path
        elif kind == "abl09":
            paths[j] = sample_under_q_dagger(field, spec, rng)
        else:
            paths[j] = sample_field(field, rng)
    if kind == "uniform":
        weights = q_weights(paths, spec)
    elif kind == "abl09":
        weights = weights_from_counts(spec.design_counts(paths), spec)
    else:
        weights = np.ones(stop - start)
    return paths, weights


def _draw_chunk_star(args):
    return _draw_chunk(*args)


def simulate(kind: str, field: DiscretizedField, spec, n: int, seed: int,
             workers: int | None = None, b: float | None = None,
             bounds: FunctionClassBounds | None = None) -> SampleSet:
    """Draw ``n`` replicates under the chosen sampling measure.

    ``spec`` is the MixturePriors for ``uniform``, the DesignMeasure for
    ``abl09`` and ignored for ``naive``. Replicate ``i`` always uses
    ``derive_stream(seed, i)``, so the result does not depend on ``workers``.
    """
    if kind not in ESTIMATORS:
        raise ValueError(f"unknown estimator {kind!r}; expected one of {ESTIMATORS}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    workers = workers or default_workers()
    if kind == "uniform":
        b, bounds = spec.b, spec.bounds
    elif kind == "abl09":
        b = spec.b
    if b is None:
        raise ValueError("naive sampling needs the threshold b")
    if workers == 1:
        paths, weights = _draw_chunk(kind, field, spec, seed, 0, n)
    else:
        edges = np.linspace(0, n, min(n, 4 * workers) + 1).astype(int)
        tasks = [(kind, field, spec, seed, lo, hi) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_draw_chunk_star, tasks))
        paths = np.concatenate([p for p, _ in parts])
        weights = np.concatenate([w for _, w in parts])
    return SampleSet(kind=kind, paths=paths, weights=weights, points=field.points, b=b, bounds=bounds)


@dataclass
class ExperimentConfig:
    experiment: str
    covariance: CovarianceModel
    lattice_bounds: tuple
    points_per_dim: int
    bounds: FunctionClassBounds
    trends: list[TrendModel]
    b: float
    n: int
    seed: int
    estimator: str = "uniform"
    a: float = 1.0
    design: TrendModel | None = None
    param_names: tuple[str, ...] = ()
    workers: int | None = None
    _field: DiscretizedField | None = dc_field(default=None, repr=False, compare=False)

    def field(self) -> DiscretizedField:
        if self._field is None:
            lattice = build_lattice(self.lattice_bounds, self.points_per_dim)
            self._field = DiscretizedField.from_model(self.covariance, lattice)
        return self._field

    def priors(self) -> MixturePriors:
        return MixturePriors(self.bounds, self.b, self.a)

    def problems(self) -> list[str]:
        """Consistency problems between bounds, trends, threshold and estimator."""
        out = []
        if self.estimator not in ESTIMATORS:
            out.append(f"estimator: unknown kind {self.estimator!r}")
        if self.n < 1:
            out.append(f"run.n: must be positive, got {self.n}")
        if self.estimator == "abl09" and self.design is None:
            out.append("estimator.design: abl09 needs a design trend")
        if self.estimator == "uniform":
            try:
                self.priors()
            except ValueError as exc:
                out.append(f"run.b: {exc}")
        points = self.field().points
        for k, trend in enumerate(self.trends):
            for msg in trend.violations(points, self.bounds):
                out.append(f"trend[{k}] {format_params(trend.label)}: {msg}")
        if self.design is not None:
            sigma, _ = self.design.on(points)
            if np.any(sigma <= 0):
                out.append("estimator.design: sigma must be positive on the lattice")
        return out

    def sampling_spec(self):
        if self.estimator == "uniform":
            return self.priors()
        if self.estimator == "abl09":
            return DesignMeasure.build(self.design, self.b, self.field().points)
        return None


def format_params(params: dict) -> str:
    return "(" + ", ".join(f"{k}={v:g}" for k, v in params.items()) + ")"


def draw_samples(config: ExperimentConfig, workers: int | None = None) -> SampleSet:
    return simulate(config.estimator, config.field(), config.sampling_spec(), config.n,
                    config.seed, workers or config.workers, b=config.b, bounds=config.bounds)


def run(config: ExperimentConfig, workers: int | None = None) -> list[EstimateSummary]:
    """One summary per trend of ``config``; all trends share a single sample set."""
    problems = config.problems()
    if problems:
        raise ValueError("invalid experiment config:\n  " + "\n  ".join(problems))
    samples = draw_samples(config, workers)
    return evaluate_many_trends(samples, config.trends)


@dataclass(frozen=True)
class SweepRow:
    params: dict
    summary: EstimateSummary
    theoretical: float | None


def sweep(config: ExperimentConfig, workers: int | None = None) -> list[SweepRow]:
    if not config.trends:
        return []
    summaries = run(config, workers)
    return [
        SweepRow(dict(t.label), s, closed_form(config, t))
        for t, s in zip(config.trends, summaries)
    ]


def _constant_value(fn) -> float | None:
    if isinstance(fn, Polynomial) and len(fn.coefs) == 1:
        return fn.coefs[0]
    return None


def closed_form(config: ExperimentConfig, trend: TrendModel) -> float | None:
    """Exact exceedance probability where one is known, else None."""
    sigma, mu = _constant_value(trend.sigma_fn), _constant_value(trend.mu_fn)
    if sigma is None or mu is None:
        return None
    kind = config.covariance.kind
    if kind == "iid":
        m = config.points_per_dim ** len(config.lattice_bounds)
        return oracle_iid_max(sigma, mu, config.b, m).value
    if kind == "cosine" and np.allclose(np.asarray(config.lattice_bounds, float), [[0.0, 0.75]]):
        return oracle_cosine(sigma, mu, config.b).value
    return None


@dataclass(frozen=True)
class Refinement:
    params: dict
    coarse: EstimateSummary
    fine: EstimateSummary
    points_coarse: int
    points_fine: int

    @property
    def relative_gap(self) -> float:
        if self.coarse.est == 0:
            return math.inf if self.fine.est else 0.0
        return abs(self.fine.est - self.coarse.est) / self.coarse.est


def refine_lattice_check(config: ExperimentConfig, factor: int = 2,
                         workers: int | None = None) -> list[Refinement]:
    """Run the estimator on the configured lattice and on one ``factor`` times finer.

    Both runs use the same seed. The relative gap between the two estimates is
    an empirical proxy for the discretisation bias.
    """
    if factor < 2:
        raise ValueError("refinement factor must be at least 2")
    fine_cfg = replace(config, points_per_dim=config.points_per_dim * factor, _field=None)
    coarse = run(config, workers)
    fine = run(fine_cfg, workers)
    m0, m1 = config.field().size, fine_cfg.field().size
    return [Refinement(dict(t.label), c, f, m0, m1) for t, c, f in zip(config.trends, coarse, fine)]


def summarize_values(values: Sequence[float]) -> EstimateSummary:
    return EstimateSummary.from_values(np.asarray(values, dtype=float))
