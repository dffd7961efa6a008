"""Plain Monte Carlo and the single-trend importance sampler it is compared with.

The single-trend design picks the lattice index with probability proportional
to the marginal exceedance probability of the design trend, pushes that one
coordinate over the threshold and fills in the rest conditionally. It is
efficient for the trend it was built for and can be arbitrarily bad (or
undefined) for other trends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import gaussian
from .errors import NonAbsolutelyContinuous
from .field import DiscretizedField, TrendModel, condition_on_point, sample_field
from .uniform_is import Replicate, exceeds


@dataclass(frozen=True, eq=False)
class DesignMeasure:
    design_trend: TrendModel
    b: float
    sigma: np.ndarray
    mu: np.ndarray
    atom_probs: np.ndarray
    log_normalizer: float

    @classmethod
    def build(cls, design_trend: TrendModel, b: float, points: np.ndarray) -> "DesignMeasure":
        sigma, mu = design_trend.on(points)
        if np.any(sigma <= 0):
            raise ValueError("design trend needs a positive standard deviation everywhere")
        log_tail = gaussian.log_phi_bar((b - mu) / sigma)
        log_norm = float(logsumexp(log_tail))
        probs = np.exp(log_tail - log_norm)
        probs /= probs.sum()
        return cls(design_trend, float(b), np.array(sigma), np.array(mu), probs, log_norm)

    @property
    def normalizer(self) -> float:
        """Sum over the lattice of P(sigma f + mu > b) under the design trend."""
        return math.exp(self.log_normalizer)

    @property
    def size(self) -> int:
        return self.atom_probs.size

    def sample_index(self, u: float) -> int:
        cum = np.cumsum(self.atom_probs)
        return int(min(np.searchsorted(cum, u * cum[-1], side="right"), self.size - 1))

    def design_counts(self, paths: np.ndarray) -> np.ndarray:
        return np.count_nonzero(self.sigma * paths + self.mu > self.b, axis=-1)


def sample_under_q_dagger(field: DiscretizedField, design: DesignMeasure,
                          rng: np.random.Generator, return_index: bool = False):
    tau = design.sample_index(rng.random())
    c = (design.b - design.mu[tau]) / design.sigma[tau]
    x = gaussian.sample_truncated_std_normal(c, rng)
    path = condition_on_point(field, tau, x, sample_field(field, rng))
    return (path, tau) if return_index else path


def q_dagger_weight(path: np.ndarray, design: DesignMeasure) -> float:
    """dP/dQ-dagger: the normaliser divided by the number of design exceedances."""
    count = int(design.design_counts(np.asarray(path)))
    if count == 0:
        raise NonAbsolutelyContinuous(
            "no design exceedance on this path: the design measure puts no mass here"
        )
    return math.exp(design.log_normalizer - math.log(count))


def weights_from_counts(counts: np.ndarray, design: DesignMeasure) -> np.ndarray:
    counts = np.asarray(counts)
    with np.errstate(divide="ignore"):
        w = np.exp(design.log_normalizer - np.log(counts))
    return np.where(counts > 0, w, np.nan)


def abl09_value(path: np.ndarray, eval_trend: TrendModel, design: DesignMeasure,
                points: np.ndarray) -> Replicate:
    """Weight a path under the design measure and score it for ``eval_trend``.

    Raises NonAbsolutelyContinuous when the evaluated event occurs on a path
    without any design exceedance.
    """
    hit = bool(exceeds(path, eval_trend, points, design.b))
    count = int(design.design_counts(path))
    if count == 0:
        if hit:
            raise NonAbsolutelyContinuous(
                "evaluated exceedance occurred on a path the design measure cannot produce"
            )
        return Replicate(weight=0.0, indicator=False, value=0.0)
    weight = q_dagger_weight(path, design)
    return Replicate(weight=weight, indicator=hit, value=weight if hit else 0.0)


def replicate_abl09(field: DiscretizedField, eval_trend: TrendModel, design: DesignMeasure,
                    rng: np.random.Generator) -> Replicate:
    path = sample_under_q_dagger(field, design, rng)
    return abl09_value(path, eval_trend, design, field.points)


def replicate_naive(field: DiscretizedField, trend: TrendModel, b: float,
                    rng: np.random.Generator) -> Replicate:
    path = sample_field(field, rng)
    hit = bool(exceeds(path, trend, field.points, b))
    return Replicate(weight=1.0, indicator=hit, value=1.0 if hit else 0.0)
