"""Standard normal tail functions and one-sided truncated normal draws.

Everything here is evaluated through ``erfcx`` so that the right tail stays
accurate (and its logarithm finite) far beyond the point where ``1 - cdf``
underflows.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# below this threshold inverse-cdf sampling is used, above it exponential rejection
_REJECTION_SWITCH = 1.0


class TailValue(NamedTuple):
    value: float
    log_value: float


def log_phi_bar(x):
    """Natural log of the standard normal survival function, vectorised."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    xp = x[pos]
    out[pos] = np.log(0.5 * special.erfcx(xp / _SQRT2)) - 0.5 * xp * xp
    xn = x[~pos]
    # 1 - phi_bar(|x|), kept accurate near x = 0-
    out[~pos] = np.log1p(-0.5 * special.erfc(-xn / _SQRT2))
    return out if out.ndim else float(out)


def phi_bar_value(x):
    """Standard normal survival function P(X > x), vectorised."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    xp = x[pos]
    out[pos] = 0.5 * special.erfcx(xp / _SQRT2) * np.exp(-0.5 * xp * xp)
    out[~pos] = 0.5 * special.erfc(x[~pos] / _SQRT2)
    return out if out.ndim else float(out)


def phi_bar(x: float) -> TailValue:
    """Survival probability of a standard normal at ``x`` with its logarithm."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"phi_bar needs a finite argument, got {x}")
    return TailValue(phi_bar_value(x), log_phi_bar(x))


def log_phi(x):
    """Log of the standard normal cdf, via the mirrored tail."""
    return log_phi_bar(-np.asarray(x, dtype=float))


def log_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - _LOG_SQRT_2PI


def mills_mean(c: float) -> float:
    """E[X | X > c] for a standard normal X."""
    return math.exp(float(log_pdf(c)) - log_phi_bar(c))


def sample_truncated_std_normal(c: float, rng: np.random.Generator) -> float:
    """One exact draw of X ~ N(0, 1) conditioned on X > c.

    Uses the tail quantile for ``c < 1`` and the shifted exponential rejection
    sampler with rate ``(c + sqrt(c^2 + 4)) / 2`` otherwise, whose acceptance
    probability stays above 0.75 for every ``c >= 1``.
    """
    c = float(c)
    if not math.isfinite(c):
        raise ValueError(f"truncation point must be finite, got {c}")
    if c < _REJECTION_SWITCH:
        tail = phi_bar_value(c)
        while True:
            u = 1.0 - rng.random()  # (0, 1]
            x = -special.ndtri(u * tail)
            if x > c:
                return float(x)
    rate = 0.5 * (c + math.sqrt(c * c + 4.0))
    while True:
        x = c + rng.exponential(1.0 / rate)
        d = x - rate
        if x > c and rng.random() <= math.exp(-0.5 * d * d):
            return float(x)
