"""One-dimensional probability measures under the 2-Wasserstein metric.

Measures are represented by their quantile functions sampled on a grid of
probability levels. On the real line the 2-Wasserstein distance is the L2
distance between quantile functions, and the barycenter is the pointwise
weighted average of quantiles.

Quadrature rule
---------------
Integrals over ``(0, 1)`` use the trapezoidal rule on the grid, with the
integrand held constant from ``0`` to the first level and from the last level
to ``1``. On the default midpoint grid ``p_k = (k - 1/2) / K`` this gives every
node the weight ``1/K``; the weights always sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtri

from ..errors import DomainError, GridError, ParameterError
from ..metric_core import MetricSpace

DEFAULT_GRID_SIZE = 1000
_GUMBEL_XI = 1e-12


def default_grid(k: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    return (np.arange(1, k + 1) - 0.5) / k


def quadrature_weights(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 1:
        return np.ones(1)
    q = np.empty_like(grid)
    gaps = np.diff(grid)
    q[1:-1] = 0.5 * (gaps[:-1] + gaps[1:])
    q[0] = grid[0] + 0.5 * gaps[0]
    q[-1] = (1.0 - grid[-1]) + 0.5 * gaps[-1]
    return q


def _check_grid(grid: np.ndarray) -> None:
    if grid.ndim != 1 or grid.size == 0:
        raise GridError("grid must be a nonempty vector")
    if np.any(grid <= 0) or np.any(grid >= 1):
        raise GridError("grid levels must lie strictly inside (0, 1)")
    if np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing")


@dataclass(frozen=True, eq=False)
class QuantileFunction:
    """Quantile values ``Q(p_k)`` on an increasing grid ``p_k`` in (0, 1)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        _check_grid(grid)
        if values.shape != grid.shape:
            raise GridError(f"values shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("quantile values must be finite")
        # tolerate round-off from averaging, reject genuine decreases
        diffs = np.diff(values)
        if diffs.size and diffs.min() < -1e-9 * max(1.0, np.abs(values).max()):
            raise DomainError("quantile values must be nondecreasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, u):
        """Evaluate by linear interpolation, constant beyond the end levels."""
        return np.interp(u, self.grid, self.values)

    def resample(self, grid: np.ndarray) -> "QuantileFunction":
        if grid is self.grid or np.array_equal(grid, self.grid):
            return self
        return QuantileFunction(grid, np.interp(grid, self.grid, self.values))

    @classmethod
    def normal(cls, mean: float, std: float, grid=None) -> "QuantileFunction":
        grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
        return cls(grid, mean + std * ndtri(grid))

    @classmethod
    def from_gev(cls, params: "GEVParams", grid=None) -> "QuantileFunction":
        grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
        return cls(grid, gev_quantile(params, grid))


def common_grid(qfs) -> np.ndarray:
    """The shared grid of ``qfs``, or the union of their grids."""
    first = qfs[0].grid
    if all(q.grid is first or np.array_equal(q.grid, first) for q in qfs[1:]):
        return first
    return np.unique(np.concatenate([q.grid for q in qfs]))


def w1d_dist(a: QuantileFunction, b: QuantileFunction) -> float:
    """2-Wasserstein distance between two 1-D measures given as quantile functions."""
    grid = common_grid([a, b])
    va, vb = a.resample(grid).values, b.resample(grid).values
    if va.shape != vb.shape:
        raise GridError("quantile functions could not be brought onto one grid")
    diff = va - vb
    return float(np.sqrt(np.dot(quadrature_weights(grid), diff * diff)))


def w1d_barycenter(qfs, w) -> QuantileFunction:
    """Quantile-averaging barycenter: ``Q_B = sum_i w_i Q_i`` pointwise."""
    w = np.asarray(w, dtype=float)
    grid = common_grid(qfs)
    values = w @ np.vstack([q.resample(grid).values for q in qfs])
    # pointwise averaging keeps monotonicity; clean up ulp-level noise
    return QuantileFunction(grid, np.maximum.accumulate(values))


class Wasserstein1D(MetricSpace):
    """``P(R)`` with the 2-Wasserstein metric in the quantile representation."""

    name = "wasserstein1d"

    def __init__(self, grid=None):
        self.grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
        _check_grid(self.grid)

    def validate(self, point) -> None:
        if not isinstance(point, QuantileFunction):
            raise DomainError(f"expected a QuantileFunction, got {type(point).__name__}")
        QuantileFunction(point.grid, point.values)

    def dist(self, a, b):
        return w1d_dist(a, b)

    def sq_dist(self, a, b):
        return w1d_dist(a, b) ** 2

    def barycenter(self, points, weights):
        return w1d_barycenter(points, weights)

    def _stack(self, points):
        grid = common_grid(points)
        return grid, np.vstack([q.resample(grid).values for q in points])

    def barycenters(self, points, weight_matrix):
        grid, V = self._stack(points)
        out = np.asarray(weight_matrix, dtype=float) @ V
        return [QuantileFunction(grid, np.maximum.accumulate(row)) for row in out]

    def pairwise_sq(self, a, b):
        grid, V = self._stack(list(a) + list(b))
        A, B = V[: len(a)], V[len(a):]
        q = quadrature_weights(grid)
        out = np.empty((len(a), len(b)))
        for i in range(len(a)):
            diff = B - A[i]
            out[i] = (diff * diff) @ q
        return out

    def to_chart(self, point):
        return point.resample(self.grid).values.copy()

    def from_chart(self, coords):
        return QuantileFunction(self.grid, coords)

    def point_to_json(self, point):
        return {"grid": [float(x) for x in point.grid], "values": [float(x) for x in point.values]}

    def point_from_json(self, data):
        return QuantileFunction(np.array(data["grid"], dtype=float), np.array(data["values"], dtype=float))


# --- generalized extreme value family -------------------------------------


@dataclass(frozen=True)
class GEVParams:
    """Location ``mu``, scale ``sigma > 0`` and shape ``xi`` of a GEV law."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"GEV scale must be positive, got {self.sigma!r}")


def _gev_t(p: GEVParams, x):
    z = (np.asarray(x, dtype=float) - p.mu) / p.sigma
    if abs(p.xi) < _GUMBEL_XI:
        return np.exp(-z)
    arg = 1.0 + p.xi * z
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.exp(-np.log1p(p.xi * z) / p.xi)
    # outside the support: the CDF is 0 below a lower endpoint, 1 above an upper one
    return np.where(arg > 0, t, np.inf if p.xi > 0 else 0.0)


def gev_cdf(p: GEVParams, x):
    return np.exp(-_gev_t(p, x))


def gev_pdf(p: GEVParams, x):
    """Density ``t(x)^(xi+1) exp(-t(x)) / sigma``, zero off the support."""
    t = _gev_t(p, x)
    with np.errstate(invalid="ignore", over="ignore"):
        f = np.where(np.isfinite(t) & (t > 0), t ** (p.xi + 1.0) * np.exp(-t), 0.0) / p.sigma
    return f


def gev_quantile(p: GEVParams, u):
    """Inverse CDF of the GEV law; ``u`` must lie in (0, 1)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(~(u_arr > 0)) or np.any(~(u_arr < 1)):
        raise DomainError("GEV quantile level must lie strictly inside (0, 1)")
    return p.mu + p.sigma * _gev_standard_quantile(p.xi, u_arr)


def _gev_standard_quantile(xi, u):
    y = np.log(-np.log(u))  # ln(-ln u)
    if abs(xi) < _GUMBEL_XI:
        return -y
    return np.expm1(-xi * y) / xi


def fit_gev(qf: QuantileFunction, xi_bounds=(-1.0, 1.5)) -> GEVParams:
    """Least-squares GEV fit to a quantile function on its own grid.

    For fixed shape the quantile is affine in (location, scale), so those two
    are solved exactly and only the shape is searched numerically.
    """
    q = np.sqrt(quadrature_weights(qf.grid))

    def solve(xi):
        g = _gev_standard_quantile(xi, qf.grid)
        A = np.column_stack([np.ones_like(g), g]) * q[:, None]
        coef, *_ = np.linalg.lstsq(A, qf.values * q, rcond=None)
        resid = A @ coef - qf.values * q
        return coef, float(resid @ resid)

    xs = np.linspace(xi_bounds[0], xi_bounds[1], 101)
    best = min(xs, key=lambda x: solve(x)[1])
    step = xs[1] - xs[0]
    lo, hi = max(xi_bounds[0], best - step), min(xi_bounds[1], best + step)
    res = minimize_scalar(lambda x: solve(x)[1], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    xi = float(res.x) if res.fun <= solve(best)[1] else float(best)
    (mu, sigma), _ = solve(xi)
    if sigma <= 0:
        raise ParameterError("quantile function is flat; no GEV fit with positive scale")
    return GEVParams(float(mu), float(sigma), xi)
