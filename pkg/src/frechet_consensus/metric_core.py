"""Metric-space abstraction and the generic Fréchet function, variance and mean.

Every opinion space used by the package derives from :class:`MetricSpace`.
A space must provide ``dist``; it should also provide a ``barycenter``
rule. Spaces that only expose a parameter chart (``to_chart`` /
``from_chart``) fall back to a derivative-free local search over the chart.

Fréchet means need not be unique outside of the Euclidean and Wasserstein
cases; when they are not, the returned point is one local minimizer.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionError, UnsupportedSpaceError, WeightError

WEIGHT_ATOL = 1e-12
RENORMALIZE_TOL = 1e-9


def check_weights(w, n: int | None = None) -> np.ndarray:
    """Validate a weight vector and return it as a float array on the simplex.

    Sums that drift from one by at most ``1e-9`` are renormalized; larger
    deviations, negative entries or a wrong length raise.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise WeightError(f"weights must be one-dimensional, got shape {w.shape}")
    if n is not None and w.shape[0] != n:
        raise DimensionError(f"expected {n} weights, got {w.shape[0]}")
    if w.shape[0] == 0:
        raise WeightError("weight vector is empty")
    if not np.all(np.isfinite(w)):
        raise WeightError("weights must be finite")
    if np.any(w < 0):
        raise WeightError(f"weights must be nonnegative, min is {w.min()!r}")
    total = w.sum()
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise WeightError(f"weights sum to {total!r}, not 1")
    if abs(total - 1.0) > 0.0:
        w = w / total
    return w


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


class MetricSpace:
    """Base class for opinion spaces.

    Subclasses override ``dist`` and usually ``barycenter``. The batched
    helpers (``pairwise_sq``, ``barycenters``) loop over the scalar methods
    by default; vector-like spaces override them with array arithmetic.
    """

    name = "abstract"

    def dist(self, a, b) -> float:
        raise NotImplementedError

    def sq_dist(self, a, b) -> float:
        return self.dist(a, b) ** 2

    def validate(self, point) -> None:
        """Raise if ``point`` violates the space's type invariants."""

    def to_chart(self, point) -> np.ndarray:
        raise UnsupportedSpaceError(f"space {self.name!r} has no parameter chart")

    def from_chart(self, coords: np.ndarray):
        raise UnsupportedSpaceError(f"space {self.name!r} has no parameter chart")

    def has_chart(self) -> bool:
        return type(self).to_chart is not MetricSpace.to_chart

    def barycenter(self, points: Sequence[Any], weights: np.ndarray):
        if not self.has_chart():
            raise UnsupportedSpaceError(
                f"space {self.name!r} supplies neither a barycenter rule nor a chart"
            )
        return local_search_barycenter(self, points, weights)

    def barycenters(self, points: Sequence[Any], weight_matrix: np.ndarray) -> list:
        """Barycenter of ``points`` under every row of ``weight_matrix``."""
        out = []
        for row in np.asarray(weight_matrix, dtype=float):
            support = np.flatnonzero(row > 0)
            out.append(
                self.barycenter([points[j] for j in support], row[support] / row[support].sum())
            )
        return out

    def pairwise_sq(self, a: Sequence[Any], b: Sequence[Any]) -> np.ndarray:
        """Matrix of squared distances ``d(a_i, b_j)**2``."""
        return np.array([[self.sq_dist(x, y) for y in b] for x in a], dtype=float).reshape(
            len(a), len(b)
        )

    # serialization hooks used by the harness
    def point_to_json(self, point) -> Any:
        raise UnsupportedSpaceError(f"space {self.name!r} has no JSON form")

    def point_from_json(self, data: Any):
        raise UnsupportedSpaceError(f"space {self.name!r} has no JSON form")


def _check_set(points: Sequence[Any], w) -> np.ndarray:
    if len(points) < 1:
        raise DimensionError("opinion set must contain at least one point")
    return check_weights(w, len(points))


def frechet_function(space: MetricSpace, points: Sequence[Any], w, z) -> float:
    """Weighted sum of squared distances from ``z`` to the points."""
    w = _check_set(points, w)
    sq = space.pairwise_sq([z], points)[0]
    return float(np.dot(w, sq))


def frechet_barycenter(space: MetricSpace, points: Sequence[Any], w):
    """A minimizer of the Fréchet function of ``points`` under weights ``w``."""
    w = _check_set(points, w)
    if len(points) == 1:
        return points[0]
    support = np.flatnonzero(w > 0)
    if support.size == 1:
        return points[support[0]]
    if support.size < len(points):
        points = [points[j] for j in support]
        w = w[support] / w[support].sum()
    return space.barycenter(points, w)


def frechet_variance(space: MetricSpace, points: Sequence[Any], w) -> float:
    """Fréchet function evaluated at the barycenter (the minimum value)."""
    w = _check_set(points, w)
    z = frechet_barycenter(space, points, w)
    return frechet_function(space, points, w, z)


def local_search_barycenter(space: MetricSpace, points: Sequence[Any], w, x0=None, tol=1e-12):
    """Derivative-free (Nelder-Mead) minimization of the Fréchet function over the chart."""
    w = np.asarray(w, dtype=float)
    charts = np.array([space.to_chart(p) for p in points])
    start = charts.T @ w if x0 is None else np.asarray(x0, dtype=float)

    def objective(c):
        try:
            z = space.from_chart(c)
        except ValueError:
            return np.inf
        return sum(wi * space.sq_dist(z, p) for wi, p in zip(w, points))

    scale = np.maximum(np.ptp(charts, axis=0), 1e-3)
    simplex = np.vstack([start] + [start + 0.05 * scale[k] * np.eye(len(start))[k] for k in range(len(start))])
    res = minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "xatol": tol,
            "fatol": tol,
            "maxiter": 4000 * len(start),
            "maxfev": 8000 * len(start),
            "initial_simplex": simplex,
        },
    )
    return space.from_chart(res.x)
