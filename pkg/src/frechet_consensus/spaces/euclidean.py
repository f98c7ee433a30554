"""Euclidean opinion space: points are real vectors."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, DomainError
from ..metric_core import MetricSpace


class Euclidean(MetricSpace):
    """``R^dim`` with the usual norm; the barycenter is the weighted mean."""

    name = "euclidean"

    def __init__(self, dim: int | None = None):
        self.dim = dim

    def _vec(self, p) -> np.ndarray:
        v = np.atleast_1d(np.asarray(p, dtype=float))
        if v.ndim != 1:
            raise DimensionError(f"expected a vector, got shape {v.shape}")
        if self.dim is not None and v.shape[0] != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {v.shape[0]}")
        return v

    def validate(self, point) -> None:
        if not np.all(np.isfinite(self._vec(point))):
            raise DomainError("point has non-finite coordinates")

    def dist(self, a, b) -> float:
        return float(np.linalg.norm(self._vec(a) - self._vec(b)))

    def sq_dist(self, a, b) -> float:
        diff = self._vec(a) - self._vec(b)
        return float(diff @ diff)

    def barycenter(self, points, weights):
        return np.asarray(weights, dtype=float) @ self.stack(points)

    def stack(self, points) -> np.ndarray:
        return np.vstack([self._vec(p) for p in points])

    def barycenters(self, points, weight_matrix):
        return list(np.asarray(weight_matrix, dtype=float) @ self.stack(points))

    def pairwise_sq(self, a, b):
        A, B = self.stack(a), self.stack(b)
        diff = A[:, None, :] - B[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)

    def to_chart(self, point):
        return self._vec(point).copy()

    def from_chart(self, coords):
        return np.asarray(coords, dtype=float).copy()

    def point_to_json(self, point):
        return [float(x) for x in self._vec(point)]

    def point_from_json(self, data):
        return self._vec(data)
