"""Reference values: closed forms and a quadrature oracle for tiny lattices."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import gaussian
from .field import DiscretizedField, TrendModel

_DEGENERATE_VAR = 1e-14


@dataclass(frozen=True)
class OracleValue:
    value: float
    kind: str  # "closed_form" or "brute_force"
    certified_error: float = 0.0


def oracle_iid_max(sigma: float, mu: float, b: float, M: int) -> OracleValue:
    """P(max of M iid standard normals exceeds (b - mu) / sigma)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    c = (b - mu) / sigma
    value = -math.expm1(M * float(gaussian.log_phi(c)))
    return OracleValue(value, "closed_form")


def oracle_cosine(sigma: float, mu: float, b: float) -> OracleValue:
    """Exceedance probability of sigma (X cos t + Y sin t) + mu over t in [0, 3/4]."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    u = (b - mu) / sigma
    value = gaussian.phi_bar_value(u) + 3.0 / (8.0 * math.pi) * math.exp(-0.5 * u * u)
    return OracleValue(value, "closed_form")


def _lower_orthant(c: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> tuple[float, float]:
    """P(X <= c) for X ~ N(mean, cov), dimension <= 3, with an error estimate.

    Conditions on the first coordinate and integrates the remaining orthant
    probability against its density with adaptive Gauss-Kronrod.
    """
    var0 = cov[0, 0]
    if c.size == 1:
        if var0 < _DEGENERATE_VAR:
            return float(mean[0] <= c[0]), 0.0
        return float(np.exp(gaussian.log_phi((c[0] - mean[0]) / math.sqrt(var0)))), 1e-16
    if var0 < _DEGENERATE_VAR:
        if mean[0] > c[0]:
            return 0.0, 0.0
        return _lower_orthant(c[1:], mean[1:], cov[1:, 1:])
    sd0 = math.sqrt(var0)
    gain = cov[1:, 0] / var0
    cond_cov = cov[1:, 1:] - np.outer(cov[1:, 0], cov[1:, 0]) / var0
    upper = (c[0] - mean[0]) / sd0

    def integrand(u):
        x0 = mean[0] + sd0 * u
        inner, _ = _lower_orthant(c[1:], mean[1:] + gain * (x0 - mean[0]), cond_cov)
        return math.exp(float(gaussian.log_pdf(u))) * inner

    lo = min(-40.0, upper - 1.0)
    val, err = integrate.quad(integrand, lo, upper, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val, err


def brute_force_small(field: DiscretizedField, trend: TrendModel, b: float) -> OracleValue:
    """Exact exceedance probability on a lattice of at most three points."""
    m = field.size
    if m > 3:
        raise ValueError(f"brute_force_small handles at most 3 lattice points, got {m}")
    sigma, mu = trend.on(field.points)
    c = (b - mu) / sigma
    below, err = _lower_orthant(c, np.zeros(m), np.asarray(field.sigma_mat, dtype=float))
    value = min(1.0, max(0.0, 1.0 - below))
    return OracleValue(value, "brute_force", certified_error=err + 1e-15)
