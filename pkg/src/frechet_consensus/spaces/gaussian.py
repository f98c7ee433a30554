"""Multivariate Gaussian measures under the Bures-Wasserstein metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, DimensionError, MatrixError
from ..metric_core import MetricSpace

SYMMETRY_TOL = 1e-12


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def spd_sqrt(a: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix via eigendecomposition."""
    vals, vecs = np.linalg.eigh(_symmetrize(a))
    vals = np.clip(vals, 0.0, None)
    return _symmetrize((vecs * np.sqrt(vals)) @ vecs.T)


def spd_inv_sqrt(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(_symmetrize(a))
    if vals.min() <= 0:
        raise MatrixError("matrix is not positive definite")
    return _symmetrize((vecs / np.sqrt(vals)) @ vecs.T)


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """``N(mean, cov)`` with a symmetric positive-definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise DimensionError(f"mean shape {mean.shape} and cov shape {cov.shape} disagree")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise MatrixError("covariance is not symmetric")
        cov = _symmetrize(cov)
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise MatrixError("covariance is not positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def bw_sq_dist(a: GaussianMeasure, b: GaussianMeasure) -> float:
    if a.dim != b.dim:
        raise DimensionError(f"dimensions differ: {a.dim} vs {b.dim}")
    ra = spd_sqrt(a.cov)
    cross = spd_sqrt(ra @ b.cov @ ra)
    dm = a.mean - b.mean
    val = dm @ dm + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross)
    return float(max(val, 0.0))


def bw_dist(a: GaussianMeasure, b: GaussianMeasure) -> float:
    """Closed-form 2-Wasserstein distance between two Gaussians."""
    return float(np.sqrt(bw_sq_dist(a, b)))


def bures_residual(S: np.ndarray, covs, w) -> float:
    """Frobenius norm of ``S - sum_k w_k (S^1/2 S_k S^1/2)^1/2``."""
    r = spd_sqrt(S)
    m = sum(wk * spd_sqrt(r @ Sk @ r) for wk, Sk in zip(w, covs))
    return float(np.linalg.norm(S - m, "fro"))


def bw_fixed_point_step(S: np.ndarray, covs, w) -> np.ndarray:
    """One step of ``S <- S^-1/2 (sum_k w_k (S^1/2 S_k S^1/2)^1/2)^2 S^-1/2``.

    Its fixed points are exactly the solutions of
    ``S = sum_k w_k (S^1/2 S_k S^1/2)^1/2``.
    """
    r = spd_sqrt(S)
    ri = spd_inv_sqrt(S)
    m = sum(wk * spd_sqrt(r @ Sk @ r) for wk, Sk in zip(w, covs))
    return _symmetrize(ri @ m @ m @ ri)


def bw_barycenter(measures, w, tol: float = 1e-10, max_iter: int = 500, return_info: bool = False):
    """Wasserstein barycenter of Gaussians; the result is Gaussian.

    Raises :class:`ConvergenceError` (carrying the residual) when the
    covariance fixed point is not reached within ``max_iter`` steps.
    """
    w = np.asarray(w, dtype=float)
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise DimensionError(f"measures have mixed dimensions {sorted(dims)}")
    mean = w @ np.vstack([m.mean for m in measures])
    covs = [m.cov for m in measures]
    S = _symmetrize(sum(wk * Sk for wk, Sk in zip(w, covs)))
    residual = bures_residual(S, covs, w)
    it = 0
    while residual > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"Bures-Wasserstein fixed point not reached in {max_iter} iterations "
                f"(residual {residual:.3e})",
                residual=residual,
                iterations=it,
            )
        S = bw_fixed_point_step(S, covs, w)
        residual = bures_residual(S, covs, w)
        it += 1
    result = GaussianMeasure(mean, S)
    if return_info:
        return result, {"iterations": it, "residual": residual}
    return result


class BuresWasserstein(MetricSpace):
    name = "gaussian"

    def __init__(self, dim: int | None = None, tol: float = 1e-10, max_iter: int = 500):
        self.dim = dim
        self.tol = tol
        self.max_iter = max_iter

    def validate(self, point) -> None:
        if not isinstance(point, GaussianMeasure):
            raise MatrixError(f"expected a GaussianMeasure, got {type(point).__name__}")
        GaussianMeasure(point.mean, point.cov)
        if self.dim is not None and point.dim != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {point.dim}")

    def dist(self, a, b):
        return bw_dist(a, b)

    def sq_dist(self, a, b):
        return bw_sq_dist(a, b)

    def barycenter(self, points, weights):
        return bw_barycenter(points, weights, tol=self.tol, max_iter=self.max_iter)

    def to_chart(self, point):
        d = point.dim
        L = np.linalg.cholesky(point.cov)
        return np.concatenate([point.mean, L[np.tril_indices(d)]])

    def from_chart(self, coords):
        coords = np.asarray(coords, dtype=float)
        # d + d(d+1)/2 = len(coords)
        n = coords.size
        d = int(round((-3 + np.sqrt(9 + 8 * n)) / 2))
        L = np.zeros((d, d))
        L[np.tril_indices(d)] = coords[d:]
        return GaussianMeasure(coords[:d], L @ L.T)

    def point_to_json(self, point):
        return {"mean": point.mean.tolist(), "cov": point.cov.tolist()}

    def point_from_json(self, data):
        return GaussianMeasure(np.array(data["mean"], dtype=float), np.array(data["cov"], dtype=float))
