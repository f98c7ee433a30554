"""Social-discount-rate curves from the Gollier consumption model.

A curve is identified by its free parameters ``(gamma, delta, phi, y_minus1)``;
the mean growth ``mu`` and factor shock volatility ``sigma_y`` are scenario
constants. Two metrics are available: Euclidean distance on the free
parameters, or the L2 distance between rate curves on ``t = 1..T``.

The variance of log consumption growth is implemented as written in the
model's closed form, with both terms scaled by ``sigma_y**2``. Pass
``variance_term="sigma_x"`` to use ``sigma_x**2 * t`` for the second term.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from ..errors import ConvergenceError, ParameterError
from ..metric_core import MetricSpace

# monthly calibration of the consumption factor model
CALIBRATED_MU = 0.0015
CALIBRATED_SIGMA_X = 0.0078
CALIBRATED_SIGMA_Y = 0.00034
CALIBRATED_PHI = 0.979

PHI_MAX = 1.0 - 1e-6
DEFAULT_HORIZON = 100
FREE_PARAMS = ("gamma", "delta", "phi", "y_minus1")


@dataclass(frozen=True)
class SDRCurveParams:
    gamma: float
    delta: float
    phi: float
    y_minus1: float
    mu: float = CALIBRATED_MU
    sigma_y: float = CALIBRATED_SIGMA_Y
    sigma_x: float = CALIBRATED_SIGMA_X

    def __post_init__(self):
        if not (0.0 <= self.phi <= PHI_MAX):
            raise ParameterError(f"phi must lie in [0, 1 - 1e-6], got {self.phi!r}")
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be nonnegative, got {self.gamma!r}")
        if not self.sigma_y > 0:
            raise ParameterError(f"sigma_y must be positive, got {self.sigma_y!r}")
        if not self.sigma_x > 0:
            raise ParameterError(f"sigma_x must be positive, got {self.sigma_x!r}")

    @property
    def free(self) -> np.ndarray:
        return np.array([self.gamma, self.delta, self.phi, self.y_minus1])

    def with_free(self, coords) -> "SDRCurveParams":
        g, d, p, y = (float(c) for c in coords)
        return replace(self, gamma=g, delta=d, phi=p, y_minus1=y)


def log_growth_moments(phi, y_minus1, mu, sigma_y, t, sigma_x=None):
    """Mean and variance of ``ln C(t) - ln C(0)`` under the factor model.

    ``sigma_x=None`` keeps the second variance term as ``sigma_y**2 * t``.
    """
    t = np.asarray(t, dtype=float)
    if phi > PHI_MAX:
        raise ParameterError(f"phi must not exceed 1 - 1e-6, got {phi!r}")
    # (1 - phi^t) / (1 - phi) and (1 - phi^2t) / (1 - phi^2)
    a = (1.0 - phi**t) / (1.0 - phi)
    b = (1.0 - phi ** (2.0 * t)) / (1.0 - phi**2)
    mean = mu * t + y_minus1 * a
    second = (sigma_y if sigma_x is None else sigma_x) ** 2 * t
    var = sigma_y**2 / (1.0 - phi) ** 2 * (t - 2.0 * phi * a + phi**2 * b) + second
    return mean, var


def sdr_curve_eval(p: SDRCurveParams, t, variance_term: str = "sigma_y"):
    """Discount rate ``r(t) = delta + gamma mu_t / t - gamma^2 sigma_t^2 / (2 t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise ParameterError("SDR curves are evaluated for t >= 1")
    sx = _variance_sigma(p, variance_term)
    mean, var = log_growth_moments(p.phi, p.y_minus1, p.mu, p.sigma_y, t, sigma_x=sx)
    return p.delta + p.gamma * mean / t - 0.5 * p.gamma**2 * var / t


def _variance_sigma(p: SDRCurveParams, variance_term: str):
    if variance_term == "sigma_y":
        return None
    if variance_term == "sigma_x":
        return p.sigma_x
    raise ParameterError(f"variance_term must be 'sigma_y' or 'sigma_x', got {variance_term!r}")


def time_nodes(horizon: int = DEFAULT_HORIZON) -> np.ndarray:
    return np.arange(1, horizon + 1, dtype=float)


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    gaps = np.diff(nodes)
    q = np.zeros_like(nodes)
    q[:-1] += 0.5 * gaps
    q[1:] += 0.5 * gaps
    return q


def sdr_param_dist(a: SDRCurveParams, b: SDRCurveParams, scale=None) -> float:
    """Euclidean distance on ``(gamma, delta, phi, y_minus1)``, optionally scaled."""
    diff = a.free - b.free
    if scale is not None:
        diff = diff * np.asarray(scale, dtype=float)
    return float(np.sqrt(diff @ diff))


def sdr_curve_dist(a: SDRCurveParams, b: SDRCurveParams, horizon: int = DEFAULT_HORIZON,
                   nodes=None, variance_term: str = "sigma_y") -> float:
    """L2 distance between the two rate curves on ``[1, T]`` (trapezoidal rule)."""
    nodes = time_nodes(horizon) if nodes is None else np.asarray(nodes, dtype=float)
    diff = sdr_curve_eval(a, nodes, variance_term) - sdr_curve_eval(b, nodes, variance_term)
    return float(np.sqrt(trapezoid_weights(nodes) @ (diff * diff)))


def _from_row(row) -> SDRCurveParams:
    g, d, p, y, *rest = (float(v) for v in row)
    # convex combinations may overshoot the bounds by an ulp
    return SDRCurveParams(max(g, 0.0), d, min(max(p, 0.0), PHI_MAX), y, *rest)


def _rows(params):
    rows = np.array([astuple(p) for p in params])
    # scenario constants shared by every point are carried over untouched
    shared = np.all(rows == rows[0], axis=0)
    return rows, shared


def _param_mean(params, w) -> SDRCurveParams:
    w = np.asarray(w, dtype=float)
    rows, shared = _rows(params)
    return _from_row(np.where(shared, rows[0], w @ rows))


def sdr_barycenter(params, w, metric: str = "param", horizon: int = DEFAULT_HORIZON,
                   nodes=None, variance_term: str = "sigma_y", return_info: bool = False):
    """Fréchet barycenter of SDR curves.

    Under the parameter metric this is the weighted parameter mean. Under
    the curve metric the objective equals the squared L2 distance to the
    pointwise averaged curve (up to a constant), so the barycenter is the
    least-squares projection of that average onto the parametric family,
    started from the parameter mean.
    """
    w = np.asarray(w, dtype=float)
    start = _param_mean(params, w)
    if metric == "param":
        return (start, {"grad_norm": 0.0}) if return_info else start
    if metric != "curve":
        raise ParameterError(f"unknown SDR metric {metric!r}")
    nodes = time_nodes(horizon) if nodes is None else np.asarray(nodes, dtype=float)
    sq = np.sqrt(trapezoid_weights(nodes))
    target = w @ np.vstack([sdr_curve_eval(p, nodes, variance_term) for p in params])

    def resid(c):
        return sq * (sdr_curve_eval(start.with_free(c), nodes, variance_term) - target)

    lower = [0.0, -np.inf, 0.0, -np.inf]
    upper = [np.inf, np.inf, PHI_MAX, np.inf]
    x0 = np.clip(start.free, lower, upper)
    try:
        res = least_squares(resid, x0, bounds=(lower, upper), x_scale="jac",
                            ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=2000)
    except ValueError as exc:
        raise ConvergenceError(f"curve barycenter search failed: {exc}") from exc
    r0 = resid(x0)
    if res.cost > 0.5 * (r0 @ r0):
        best, grad = x0, 2.0 * _jac(resid, x0).T @ r0
    else:
        best, grad = res.x, 2.0 * res.jac.T @ res.fun
    # projected gradient: ignore components pushing into an active bound
    at_lo = (best <= np.asarray(lower)) & (grad > 0)
    at_hi = (best >= np.asarray(upper)) & (grad < 0)
    grad = np.where(at_lo | at_hi, 0.0, grad)
    out = start.with_free(best)
    if return_info:
        return out, {"grad_norm": float(np.linalg.norm(grad)), "nfev": res.nfev}
    return out


def _jac(f, x, h=1e-7):
    f0 = f(x)
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h * max(1.0, abs(x[k]))
        cols.append((f(x + e) - f0) / e[k])
    return np.column_stack(cols)


class SDRCurveSpace(MetricSpace):
    """Space of Gollier SDR curves under the parameter or the curve metric."""

    name = "sdr"

    def __init__(self, metric: str = "param", horizon: int = DEFAULT_HORIZON, scale=None,
                 variance_term: str = "sigma_y", mu: float = CALIBRATED_MU,
                 sigma_y: float = CALIBRATED_SIGMA_Y, sigma_x: float = CALIBRATED_SIGMA_X):
        if metric not in ("param", "curve"):
            raise ParameterError(f"unknown SDR metric {metric!r}")
        _variance_sigma(SDRCurveParams(1.0, 0.0, 0.0, 0.0), variance_term)
        self.metric = metric
        self.horizon = int(horizon)
        self.nodes = time_nodes(self.horizon)
        self.quad = trapezoid_weights(self.nodes)
        self.scale = None if scale is None else np.asarray(scale, dtype=float)
        self.variance_term = variance_term
        self.defaults = SDRCurveParams(1.0, 0.0, 0.0, 0.0, mu=mu, sigma_y=sigma_y, sigma_x=sigma_x)

    def validate(self, point) -> None:
        if not isinstance(point, SDRCurveParams):
            raise ParameterError(f"expected SDRCurveParams, got {type(point).__name__}")
        SDRCurveParams(*astuple(point))

    def curve(self, p: SDRCurveParams) -> np.ndarray:
        return sdr_curve_eval(p, self.nodes, self.variance_term)

    def dist(self, a, b):
        if self.metric == "param":
            return sdr_param_dist(a, b, self.scale)
        return sdr_curve_dist(a, b, nodes=self.nodes, variance_term=self.variance_term)

    def barycenter(self, points, weights):
        if self.metric == "param":
            return _param_mean(points, weights)
        return sdr_barycenter(points, weights, metric="curve", nodes=self.nodes,
                              variance_term=self.variance_term)

    def _embed(self, points) -> np.ndarray:
        if self.metric == "param":
            X = np.vstack([p.free for p in points])
            return X if self.scale is None else X * self.scale
        return np.vstack([self.curve(p) for p in points]) * np.sqrt(self.quad)

    def pairwise_sq(self, a, b):
        A, B = self._embed(a), self._embed(b)
        diff = A[:, None, :] - B[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)

    def barycenters(self, points, weight_matrix):
        if self.metric == "curve":
            return super().barycenters(points, weight_matrix)
        W = np.asarray(weight_matrix, dtype=float)
        rows, shared = _rows(points)
        return [_from_row(np.where(shared, rows[0], r)) for r in W @ rows]

    def to_chart(self, point):
        return point.free

    def from_chart(self, coords):
        return self.defaults.with_free(coords)

    def point_to_json(self, point):
        return {k: float(getattr(point, k)) for k in
                ("gamma", "delta", "phi", "y_minus1", "mu", "sigma_y", "sigma_x")}

    def point_from_json(self, data):
        return SDRCurveParams(**{k: float(v) for k, v in data.items()})
