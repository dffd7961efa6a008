"""Gaussian field models on a regular lattice.

A field here is zero mean with unit variance; its law on the lattice is fixed
by a correlation matrix and a square root of it. Trends (mean and standard
deviation functions) live next to the field since they are evaluated on the
same points.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import ClassViolation, NotPositiveSemidefinite

_PSD_TOL = 1e-10
_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class LatticeDomain:
    bounds: tuple[tuple[float, float], ...]
    points: np.ndarray  # shape (M, d)
    spacing: float
    points_per_dim: int

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def covering_radius(self) -> float:
        """Largest distance from a point of the box to its nearest lattice point."""
        half = []
        for lo, hi in self.bounds:
            n = self.points_per_dim
            half.append((hi - lo) if n == 1 else 0.5 * (hi - lo) / (n - 1))
        return math.sqrt(sum(h * h for h in half))


def build_lattice(bounds: Sequence[Sequence[float]], points_per_dim: int) -> LatticeDomain:
    """Evenly spaced grid over a box, both endpoints included in each dimension.

    ``bounds`` is either a single ``(lo, hi)`` pair or a list of them.
    """
    if len(bounds) == 2 and all(np.isscalar(v) for v in bounds):
        bounds = [bounds]
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if not bounds:
        raise ValueError("lattice needs at least one dimension")
    if points_per_dim < 1:
        raise ValueError(f"points_per_dim must be >= 1, got {points_per_dim}")
    for k, (lo, hi) in enumerate(bounds):
        if not lo <= hi:
            raise ValueError(f"invalid interval in dimension {k}: [{lo}, {hi}]")
    axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in bounds]
    pts = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(bounds))
    if points_per_dim > 1:
        spacing = max((hi - lo) / (points_per_dim - 1) for lo, hi in bounds)
    else:
        spacing = max(hi - lo for lo, hi in bounds)
    pts.setflags(write=False)
    return LatticeDomain(bounds=bounds, points=pts, spacing=spacing, points_per_dim=points_per_dim)


@dataclass(frozen=True)
class CovarianceModel:
    """Correlation kernel of the unit-variance field.

    kind is one of ``"iid"``, ``"exponential"``, ``"cosine"`` or ``"explicit"``.
    The Hölder fields describe the kernel's regularity and are informational.
    """

    kind: str
    scale: float = 1.0
    matrix: np.ndarray | None = None
    holder_exponent: float = 1.0
    holder_const: float = 1.0

    def __post_init__(self):
        if self.kind not in ("iid", "exponential", "cosine", "explicit"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "exponential" and not self.scale > 0:
            raise ValueError(f"exponential scale must be positive, got {self.scale}")
        if self.kind == "explicit" and self.matrix is None:
            raise ValueError("explicit covariance needs a matrix")

    @classmethod
    def iid(cls):
        return cls("iid")

    @classmethod
    def exponential(cls, scale: float = 1.0):
        return cls("exponential", scale=scale, holder_const=1.0 / scale)

    @classmethod
    def cosine(cls):
        return cls("cosine")

    @classmethod
    def explicit(cls, matrix):
        return cls("explicit", matrix=np.asarray(matrix, dtype=float))


def covariance_matrix(model: CovarianceModel, lattice: LatticeDomain) -> np.ndarray:
    pts = lattice.points
    m = lattice.size
    if model.kind == "iid":
        return np.eye(m)
    if model.kind == "explicit":
        sigma = np.asarray(model.matrix, dtype=float)
        if sigma.shape != (m, m):
            raise ValueError(f"explicit covariance has shape {sigma.shape}, lattice needs {(m, m)}")
        if np.max(np.abs(sigma - sigma.T)) > _SYMMETRY_TOL:
            raise ValueError("explicit covariance is not symmetric")
        return sigma.copy()
    diff = pts[:, None, :] - pts[None, :, :]
    if model.kind == "exponential":
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        return np.exp(-dist / model.scale)
    if lattice.dim != 1:
        raise ValueError("the cosine process is defined on one-dimensional index sets only")
    return np.cos(diff[..., 0])


def sqrt_factor(sigma_mat: np.ndarray) -> np.ndarray:
    """Return A with A @ A.T equal to ``sigma_mat``.

    Cholesky when the matrix is strictly positive definite; otherwise a
    symmetric eigendecomposition with eigenvalues of magnitude below 1e-10
    (relative to the largest) set to zero, which handles rank-deficient
    kernels such as the cosine process.
    """
    sigma_mat = np.asarray(sigma_mat, dtype=float)
    try:
        a = np.linalg.cholesky(sigma_mat)
        if np.max(np.abs(a @ a.T - sigma_mat)) <= 1e-10:
            return a
    except np.linalg.LinAlgError:
        pass
    sym = 0.5 * (sigma_mat + sigma_mat.T)
    vals, vecs = np.linalg.eigh(sym)
    top = max(1.0, float(vals[-1]))
    if vals[0] < -_PSD_TOL * top:
        raise NotPositiveSemidefinite(f"covariance has eigenvalue {vals[0]:.3e}")
    vals = np.where(vals <= _PSD_TOL * top, 0.0, vals)
    return vecs * np.sqrt(vals)


@dataclass(frozen=True, eq=False)
class DiscretizedField:
    lattice: LatticeDomain
    sigma_mat: np.ndarray
    sqrt: np.ndarray
    model: CovarianceModel | None = None

    @classmethod
    def from_model(cls, model: CovarianceModel, lattice: LatticeDomain) -> "DiscretizedField":
        sigma = covariance_matrix(model, lattice)
        if np.max(np.abs(np.diag(sigma) - 1.0)) > 1e-12:
            raise ValueError("field must have unit variance at every lattice point")
        a = sqrt_factor(sigma)
        for arr in (sigma, a):
            arr.setflags(write=False)
        return cls(lattice=lattice, sigma_mat=sigma, sqrt=a, model=model)

    @property
    def size(self) -> int:
        return self.lattice.size

    @property
    def points(self) -> np.ndarray:
        return self.lattice.points


def sample_field(field: DiscretizedField, rng: np.random.Generator) -> np.ndarray:
    """One draw of the field on its lattice."""
    return field.sqrt @ rng.standard_normal(field.size)


def condition_on_point(field: DiscretizedField, tau: int, x: float, unconditional: np.ndarray) -> np.ndarray:
    """Turn an unconditional draw into a draw given f(t_tau) = x.

    ``y + Sigma[:, tau] (x - y[tau])`` has the conditional law: its mean is
    ``Sigma[:, tau] x`` and ``(I - c e_tau^T) A`` is a square root of
    ``Sigma - c c^T`` because the field has unit variance.
    """
    c = field.sigma_mat[:, tau]
    path = unconditional + c * (x - unconditional[tau])
    path[tau] = x
    return path


def conditional_given_point(field: DiscretizedField, tau_index: int, x: float,
                            rng: np.random.Generator) -> np.ndarray:
    if not 0 <= tau_index < field.size:
        raise IndexError(f"tau_index {tau_index} outside 0..{field.size - 1}")
    return condition_on_point(field, tau_index, x, sample_field(field, rng))


@dataclass(frozen=True)
class FunctionClassBounds:
    mu_l: float
    mu_u: float
    sigma_l: float
    sigma_u: float
    holder_exponent: float = 1.0
    holder_const: float = 1.0

    def __post_init__(self):
        if not self.sigma_l > 0:
            raise ValueError(f"sigma_l must be positive, got {self.sigma_l}")
        if not self.mu_l <= self.mu_u:
            raise ValueError(f"mu_l={self.mu_l} exceeds mu_u={self.mu_u}")
        if not self.sigma_l <= self.sigma_u:
            raise ValueError(f"sigma_l={self.sigma_l} exceeds sigma_u={self.sigma_u}")


@dataclass(frozen=True)
class Polynomial:
    """c0 + c1 (t - center) + c2 (t - center)^2 + ... in coordinate ``axis``."""

    coefs: tuple[float, ...]
    center: float = 0.0
    axis: int = 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        u = points[:, self.axis] - self.center
        out = np.zeros(points.shape[0])
        for c in reversed(self.coefs):
            out = out * u + c
        return out

    @classmethod
    def constant(cls, value: float):
        return cls((float(value),))


TrendFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TrendModel:
    """Mean and standard deviation functions, evaluated on (M, d) point arrays."""

    mu_fn: TrendFn
    sigma_fn: TrendFn
    class_bounds: FunctionClassBounds | None = None
    label: dict = dc_field(default_factory=dict, compare=False)

    @classmethod
    def constant(cls, sigma: float, mu: float = 0.0, class_bounds=None, label: dict | None = None):
        return cls(Polynomial.constant(mu), Polynomial.constant(sigma), class_bounds, dict(label or {}))

    def on(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(sigma, mu) evaluated at ``points``."""
        m = np.atleast_2d(points).shape[0]
        sigma = np.broadcast_to(np.asarray(self.sigma_fn(points), dtype=float), (m,))
        mu = np.broadcast_to(np.asarray(self.mu_fn(points), dtype=float), (m,))
        return sigma, mu

    def violations(self, points: np.ndarray, bounds: FunctionClassBounds | None = None,
                   tol: float = 1e-12) -> list[str]:
        bounds = bounds or self.class_bounds
        if bounds is None:
            return []
        sigma, mu = self.on(points)
        msgs = []
        checks = (
            ("mu", mu, bounds.mu_l, bounds.mu_u),
            ("sigma", sigma, bounds.sigma_l, bounds.sigma_u),
        )
        for name, vals, lo, hi in checks:
            bad = np.flatnonzero((vals < lo - tol) | (vals > hi + tol))
            if bad.size:
                i = bad[0]
                where = np.atleast_2d(points)[i]
                msgs.append(
                    f"{name}(t)={vals[i]:.6g} outside [{lo:.6g}, {hi:.6g}] at t={where.tolist()}"
                    f" ({bad.size} lattice point(s))"
                )
        return msgs

    def check_membership(self, points: np.ndarray, bounds: FunctionClassBounds | None = None):
        msgs = self.violations(points, bounds)
        if msgs:
            raise ClassViolation("; ".join(msgs))
