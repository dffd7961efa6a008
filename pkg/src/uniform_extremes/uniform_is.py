"""Mixture change of measure that is efficient uniformly over a trend class.

Under the sampling measure a random scale ``varsigma`` (density g on
``[sigma_l, sigma_u + delta^2]``), a random level ``nu`` (density h on
``[mu_l, mu_u + delta]``) and a uniform lattice index ``tau`` are drawn, the
field value at ``tau`` is pushed over ``(b - nu) / varsigma``, and the rest of
the path follows the original conditional law. The likelihood ratio depends on
the path only through ``sum_i l(f(t_i))`` so one sample set serves every trend
in the class.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate

from . import gaussian
from .errors import ZeroMixtureMass
from .field import DiscretizedField, FunctionClassBounds, TrendModel, condition_on_point, sample_field
from .summary import EstimateSummary

_GL_ORDER = 64
_PANELS_PER_SEGMENT = 32
_LOG_OVERFLOW = 700.0
_BATCH_VALUES = 1 << 15


@dataclass(frozen=True, eq=False)
class MixturePriors:
    """Priors of the random scale and level with the inflation ``delta_b = a / b``.

    ``g`` and ``h`` default to uniform densities. Other densities can be given
    as frozen scipy distributions supported on ``I2`` and ``I1`` respectively;
    they must provide ``pdf`` and ``ppf``.
    """

    bounds: FunctionClassBounds
    b: float
    a: float = 1.0
    g: object | None = None
    h: object | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.b > 0:
            raise ValueError(f"threshold b must be positive, got {self.b}")
        if not self.b > self.I1[1]:
            raise ValueError(
                f"threshold b={self.b} must exceed mu_u + delta_b = {self.I1[1]:.6g}"
            )
        for name, dens, (lo, hi) in (("g", self.g, self.I2), ("h", self.h, self.I1)):
            if dens is None:
                continue
            mass, _ = integrate.quad(dens.pdf, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
            if abs(mass - 1.0) > 1e-10:
                raise ValueError(f"prior {name} integrates to {mass!r} on [{lo}, {hi}], not 1")
        if self.log_ell_bound() > _LOG_OVERFLOW:
            raise ValueError(
                f"s_max={self.s_max:.3g} is too large: the weight function overflows double precision"
            )

    @property
    def delta_b(self) -> float:
        return self.a / self.b

    @property
    def I1(self) -> tuple[float, float]:
        return self.bounds.mu_l, self.bounds.mu_u + self.delta_b

    @property
    def I2(self) -> tuple[float, float]:
        return self.bounds.sigma_l, self.bounds.sigma_u + self.delta_b**2

    @property
    def uniform(self) -> bool:
        return self.g is None and self.h is None

    @property
    def s_min(self) -> float:
        return (self.b - self.I1[1]) / self.I2[1]

    @property
    def s_max(self) -> float:
        return (self.b - self.I1[0]) / self.I2[0]

    def breakpoints(self) -> np.ndarray:
        """Points in [s_min, s_max] where the inner integration range changes form."""
        (m_lo, m_hi), (v_lo, v_hi) = self.I1, self.I2
        b = self.b
        pts = [self.s_min, (b - m_hi) / v_lo, (b - m_lo) / v_hi, self.s_max]
        return np.unique(np.clip(pts, self.s_min, self.s_max))

    def log_ell_bound(self) -> float:
        return 0.5 * self.s_max**2 + math.log(self.s_max) + 1.0

    def sample_scale(self, u: float) -> float:
        lo, hi = self.I2
        return lo + (hi - lo) * u if self.g is None else float(self.g.ppf(u))

    def sample_level(self, u: float) -> float:
        lo, hi = self.I1
        return lo + (hi - lo) * u if self.h is None else float(self.h.ppf(u))

    @cached_property
    def table(self) -> "EllTable":
        return EllTable(self)


def _scale_range(s: np.ndarray, priors: MixturePriors) -> tuple[np.ndarray, np.ndarray]:
    (m_lo, m_hi), (v_lo, v_hi) = priors.I1, priors.I2
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.maximum((priors.b - m_hi) / s, v_lo)
        hi = np.minimum((priors.b - m_lo) / s, v_hi)
    empty = ~(s > 0) | ~(hi > lo)
    return np.where(empty, v_lo, lo), np.where(empty, v_lo, hi)


def r_of_s(s, priors: MixturePriors):
    """Inner integral of the weight function for uniform priors, in closed form.

    Returns ``(hi^2 - lo^2) / (2 |I1| |I2|)`` where ``[lo, hi]`` is the set of
    scales for which the level ``b - s * scale`` falls in ``I1``.
    """
    if not priors.uniform:
        raise ValueError("closed-form r(s) only exists for uniform priors; use inner_integral")
    s = np.asarray(s, dtype=float)
    lo, hi = _scale_range(s, priors)
    len1 = priors.I1[1] - priors.I1[0]
    len2 = priors.I2[1] - priors.I2[0]
    out = 0.5 * (hi * hi - lo * lo) / (len1 * len2)
    return out if out.ndim else float(out)


_INNER_GL = np.polynomial.legendre.leggauss(48)


def inner_integral(s, priors: MixturePriors):
    """``int varsigma h(b - s varsigma) g(varsigma) dvarsigma`` for any priors."""
    if priors.uniform:
        return r_of_s(s, priors)
    s = np.asarray(s, dtype=float)
    lo, hi = _scale_range(s, priors)
    # v = mid - half * cos(theta) smooths algebraic singularities of the
    # densities at the ends of the integration range (e.g. beta priors)
    x, w = _INNER_GL
    theta = 0.5 * np.pi * (x + 1.0)
    half = 0.5 * (hi - lo)[..., None]
    v = 0.5 * (hi + lo)[..., None] - half * np.cos(theta)
    jac = half * np.sin(theta) * 0.5 * np.pi
    g = priors.g.pdf(v) if priors.g is not None else 1.0 / (priors.I2[1] - priors.I2[0])
    h = priors.h.pdf(priors.b - s[..., None] * v) if priors.h is not None else 1.0 / (priors.I1[1] - priors.I1[0])
    out = np.sum(w * v * g * h * jac, axis=-1)
    return out if out.ndim else float(out)


def _integrand(s: np.ndarray, priors: MixturePriors) -> np.ndarray:
    r = np.asarray(inner_integral(s, priors))
    with np.errstate(divide="ignore"):
        return np.exp(np.log(r) - gaussian.log_phi_bar(s))


def _panel_edges(priors: MixturePriors, panels: int) -> np.ndarray:
    bp = priors.breakpoints()
    if bp.size == 1:
        return bp
    pieces = [np.linspace(lo, hi, panels + 1)[:-1] for lo, hi in zip(bp[:-1], bp[1:])]
    return np.concatenate(pieces + [bp[-1:]])


class EllTable:
    """Cumulative weight function on a fixed panel grid over [s_min, s_max].

    ``l(z)`` is the cumulative value at the panel edge left of ``z`` plus a
    Gauss-Legendre integral over the remaining partial panel. Panels never
    straddle a breakpoint of the inner integral, so each one sees a smooth
    integrand.
    """

    def __init__(self, priors: MixturePriors, panels: int = _PANELS_PER_SEGMENT, order: int = _GL_ORDER):
        self.priors = priors
        self.nodes, self.weights = np.polynomial.legendre.leggauss(order)
        self.edges = _panel_edges(priors, panels)
        if self.edges.size > 1:
            widths = np.diff(self.edges)
            pieces = self._gauss(self.edges[:-1], widths)
            self.cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
        else:
            self.cumulative = np.zeros(1)

    def _gauss(self, left: np.ndarray, width: np.ndarray) -> np.ndarray:
        half = 0.5 * width[:, None]
        s = left[:, None] + half * (self.nodes + 1.0)
        return np.sum(self.weights * _integrand(s, self.priors) * half, axis=-1)

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        flat = np.clip(z.ravel(), self.priors.s_min, self.priors.s_max)
        out = np.zeros(flat.shape)
        active = np.flatnonzero(flat > self.priors.s_min)
        if active.size and self.edges.size > 1:
            zc = flat[active]
            k = np.clip(np.searchsorted(self.edges, zc, side="right") - 1, 0, self.edges.size - 2)
            left = self.edges[k]
            out[active] = self.cumulative[k] + self._gauss(left, zc - left)
        out = out.reshape(z.shape)
        return out if out.ndim else float(out)


def ell(z, priors: MixturePriors):
    """Mixture weight function ``l(z) = int_{s < z} r(s) / phi_bar(s) ds``."""
    return priors.table(z)


def ell_refined(z, priors: MixturePriors, rtol: float = 1e-10, max_doublings: int = 8):
    """Weight function by repeated panel doubling, stopped at relative change ``rtol``."""
    panels = _PANELS_PER_SEGMENT
    prev = EllTable(priors, panels)(z)
    for _ in range(max_doublings):
        panels *= 2
        cur = EllTable(priors, panels)(z)
        scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
        if np.all(np.abs(cur - prev) <= rtol * scale):
            return cur
        prev = cur
    warnings.warn("weight function refinement did not reach the requested tolerance", RuntimeWarning)
    return prev


def likelihood_ratio(path: np.ndarray, priors: MixturePriors) -> float:
    """dP/dQ for one path: ``M / sum_i l(f(t_i))``."""
    path = np.asarray(path, dtype=float)
    total = float(np.sum(ell(path, priors)))
    if not total > 0:
        raise ZeroMixtureMass("every lattice value lies below s_min; the path has zero mass under Q")
    return path.size / total


@dataclass(frozen=True)
class TiltedSample:
    path: np.ndarray
    varsigma: float
    nu: float
    tau_index: int


@dataclass(frozen=True)
class Replicate:
    weight: float
    indicator: bool
    value: float


def sample_under_q(field: DiscretizedField, priors: MixturePriors, rng: np.random.Generator) -> TiltedSample:
    m = field.size
    u_scale, u_level, u_index = rng.random(3)
    varsigma = priors.sample_scale(u_scale)
    nu = priors.sample_level(u_level)
    tau = min(int(u_index * m), m - 1)
    x = gaussian.sample_truncated_std_normal((priors.b - nu) / varsigma, rng)
    path = condition_on_point(field, tau, x, sample_field(field, rng))
    return TiltedSample(path=path, varsigma=varsigma, nu=nu, tau_index=tau)


def exceeds(paths: np.ndarray, trend: TrendModel, points: np.ndarray, b: float) -> np.ndarray:
    """Indicator of ``max_i sigma(t_i) f(t_i) + mu(t_i) > b`` along the last axis."""
    sigma, mu = trend.on(points)
    return np.any(sigma * paths + mu > b, axis=-1)


def replicate_uniform(field: DiscretizedField, trend: TrendModel, priors: MixturePriors,
                      rng: np.random.Generator) -> Replicate:
    trend.check_membership(field.points, priors.bounds)
    sample = sample_under_q(field, priors, rng)
    weight = likelihood_ratio(sample.path, priors)
    hit = bool(exceeds(sample.path, trend, field.points, priors.b))
    return Replicate(weight=weight, indicator=hit, value=weight if hit else 0.0)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Paths drawn once, with their trend-independent likelihood ratios.

    ``weights[j]`` is dP/d(sampling measure) for path ``j``; NaN marks a path
    whose ratio is undefined (only possible for the single-index design).
    """

    kind: str
    paths: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    b: float
    bounds: FunctionClassBounds | None = None

    @property
    def n(self) -> int:
        return self.paths.shape[0]

    def values(self, trend: TrendModel) -> tuple[np.ndarray, int]:
        hit = exceeds(self.paths, trend, self.points, self.b)
        bad = hit & np.isnan(self.weights)
        vals = np.where(hit & ~bad, self.weights, 0.0)
        return vals, int(np.count_nonzero(bad))


def q_weights(paths: np.ndarray, priors: MixturePriors) -> np.ndarray:
    """Per-path ``M / sum_i l(f(t_i))`` for a stack of paths."""
    paths = np.atleast_2d(paths)
    rows = max(1, _BATCH_VALUES // max(1, paths.shape[-1]))
    totals = np.concatenate([
        np.sum(ell(paths[i:i + rows], priors), axis=-1) for i in range(0, paths.shape[0], rows)
    ])
    if np.any(~(totals > 0)):
        raise ZeroMixtureMass("a path in the batch has zero mass under Q")
    return paths.shape[-1] / totals


def evaluate_many_trends(samples: SampleSet, trends: Sequence[TrendModel], b: float | None = None) -> list[EstimateSummary]:
    """Summaries for several trends from one shared sample set.

    Only the exceedance indicator is recomputed per trend.
    """
    if b is not None and b != samples.b:
        raise ValueError(f"sample set was drawn for b={samples.b}, not b={b}")
    out = []
    for trend in trends:
        if samples.kind == "uniform":
            trend.check_membership(samples.points, samples.bounds)
        vals, errors = samples.values(trend)
        out.append(EstimateSummary.from_values(vals, errors))
    return out
