"""One-shot consensus points.

Two characterizations are solved here:

* geometric: the point minimizing the worst squared deviation from the
  anchors (a Chebyshev center), reached through its dual, the weight vector
  maximizing the weighted Fréchet variance;
* probabilistic: the point maximizing the joint acceptance probability
  ``prod_i phi_i(d^2(x, x_i))``, reached through a fixed point on the
  barycenter weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import expit

from .errors import ConvergenceError, DimensionError, ParameterError
from .metric_core import MetricSpace, frechet_barycenter, uniform_weights
from .spaces.gaussian import (
    BuresWasserstein,
    GaussianMeasure,
    bures_residual,
    bw_barycenter,
    bw_fixed_point_step,
    bw_sq_dist,
)

FEASIBILITY_RTOL = 1e-8


@dataclass
class DeviationProfile:
    """Per-agent deviation radii and optional objective weights."""

    epsilons: np.ndarray
    thetas: np.ndarray | None = None

    def __post_init__(self):
        self.epsilons = np.atleast_1d(np.asarray(self.epsilons, dtype=float))
        if np.any(~(self.epsilons > 0)):
            raise ParameterError("deviation radii must be positive")
        if self.thetas is not None:
            self.thetas = np.atleast_1d(np.asarray(self.thetas, dtype=float))
            if self.thetas.shape != self.epsilons.shape:
                raise DimensionError("thetas and epsilons must have the same length")
            if np.any(self.thetas < 0):
                raise ParameterError("objective weights must be nonnegative")

    @classmethod
    def uniform(cls, n: int, epsilon: float = np.inf) -> "DeviationProfile":
        return cls(np.full(n, epsilon))


@dataclass
class LogisticAcceptance:
    """Acceptance ``phi_i(s) = 1 / (2 (1 + exp(alpha_i s)))`` of squared distance ``s``.

    At ``s = 0`` this gives 1/4, not 1/2.
    """

    alphas: np.ndarray

    def __post_init__(self):
        self.alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        if np.any(~(self.alphas >= 0)):
            raise ParameterError("logistic slopes must be nonnegative")

    def __len__(self):
        return self.alphas.shape[0]

    def log_phi(self, s):
        # log(1/2) - log(1 + e^{alpha s}), computed stably
        return -np.log(2.0) - np.logaddexp(0.0, self.alphas * np.asarray(s, dtype=float))

    def phi(self, s):
        return np.exp(self.log_phi(s))

    def psi_prime(self, s):
        """Derivative of ``-log phi_i`` at ``s``."""
        return self.alphas * expit(self.alphas * np.asarray(s, dtype=float))


AcceptanceFunctionSpec = LogisticAcceptance


@dataclass
class ConsensusResult:
    point: object
    weights: np.ndarray
    objective: float
    feasible: bool = True
    iterations: int = 0
    gap: float | None = None
    flags: np.ndarray | None = None
    info: dict = field(default_factory=dict)


def _sq_to(space: MetricSpace, z, points) -> np.ndarray:
    return space.pairwise_sq([z], points)[0]


def _all_identical(space: MetricSpace, points) -> bool:
    return all(space.sq_dist(points[0], p) == 0.0 for p in points[1:])


def acceptance_product(space: MetricSpace, points, spec: LogisticAcceptance, x) -> float:
    """Joint acceptance probability of ``x`` under independent agents."""
    if len(spec) != len(points):
        raise DimensionError("one acceptance function per agent is required")
    return float(np.exp(np.sum(spec.log_phi(_sq_to(space, x, points)))))


def geometric_consensus(space: MetricSpace, points, profile: DeviationProfile | None = None,
                        tol: float = 1e-6, max_iter: int = 10_000) -> ConsensusResult:
    """Minimize ``max_i d^2(x, x_i)`` via the dual ``max_w V(w)``.

    The dual is solved by pairwise Frank-Wolfe on the simplex. The gradient
    of ``V`` at ``w`` is the vector of squared distances from the
    barycenter to the anchors, and its Frank-Wolfe gap is exactly the
    primal-dual gap ``max_i d^2 - V(w)``.
    """
    n = len(points)
    profile = DeviationProfile.uniform(n) if profile is None else profile
    if profile.epsilons.shape[0] != n:
        raise DimensionError("one deviation radius per agent is required")
    eps2 = float(np.min(profile.epsilons) ** 2)
    if n == 1 or _all_identical(space, points):
        return ConsensusResult(points[0], uniform_weights(n), 0.0, True, 0, 0.0)

    def evaluate(w):
        z = frechet_barycenter(space, points, w)
        return z, _sq_to(space, z, points)

    w = uniform_weights(n)
    z, g = evaluate(w)
    gap = float(g.max() - w @ g)
    it = 0
    while gap > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"dual ascent stopped after {max_iter} iterations with gap {gap:.3e}",
                residual=gap, iterations=it,
            )
        s = int(np.argmax(g))
        active = np.flatnonzero(w > 0)
        v = int(active[np.argmin(g[active])])
        step_max = w[v]

        def slope(gamma, s=s, v=v, base=w.copy()):
            trial = base.copy()
            trial[s] += gamma
            trial[v] -= gamma
            trial[v] = max(trial[v], 0.0)
            _, gt = evaluate(trial / trial.sum())
            return gt[s] - gt[v]

        if slope(step_max) >= 0:
            gamma = step_max
        else:
            gamma = brentq(slope, 0.0, step_max, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        w = w.copy()
        w[s] += gamma
        w[v] = max(w[v] - gamma, 0.0) if gamma < step_max else 0.0
        w = w / w.sum()
        z, g = evaluate(w)
        gap = float(g.max() - w @ g)
        it += 1
    objective = float(g.max())
    return ConsensusResult(z, w, objective, objective <= eps2, it, gap,
                           info={"dual_value": float(w @ g)})


def geometric_consensus_general(space: MetricSpace, points, profile: DeviationProfile,
                                enforce_bounds: bool = False) -> ConsensusResult:
    """Minimize ``sum_i theta_i s_i`` with ``d^2(x, x_i) <= s_i <= eps_i^2``.

    With the slacks binding this is the Fréchet barycenter under weights
    proportional to ``theta``; per-agent flags report which bounds hold.
    With ``enforce_bounds`` and a space offering a chart, a violated bound
    triggers a constrained local solve started from that barycenter.
    """
    if profile.thetas is None:
        raise ParameterError("the generalized problem needs per-agent thetas")
    n = len(points)
    if profile.thetas.shape[0] != n:
        raise DimensionError("one theta per agent is required")
    total = profile.thetas.sum()
    if total <= 0:
        raise ParameterError("thetas must not all be zero")
    w = profile.thetas / total
    eps2 = profile.epsilons**2
    z = frechet_barycenter(space, points, w)
    d2 = _sq_to(space, z, points)
    if enforce_bounds and np.any(d2 > eps2) and space.has_chart():
        z, d2 = _constrained_solve(space, points, profile.thetas, eps2, z)
    # relative slack absorbs the constrained solver's tolerance at an active bound
    flags = d2 <= eps2 * (1.0 + FEASIBILITY_RTOL)
    return ConsensusResult(z, w, float(profile.thetas @ d2), bool(flags.all()), flags=flags)


def _constrained_solve(space, points, thetas, eps2, z0):
    def d2_of(c):
        return _sq_to(space, space.from_chart(c), points)

    res = minimize(
        lambda c: float(thetas @ d2_of(c)),
        space.to_chart(z0),
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda c: eps2 - d2_of(c)}],
        options={"ftol": 1e-12, "maxiter": 500},
    )
    z = space.from_chart(res.x)
    return z, _sq_to(space, z, points)


def probabilistic_consensus(space: MetricSpace, points, spec: LogisticAcceptance,
                            tol: float = 1e-10, max_iter: int = 5_000,
                            dampings=(0.5, 0.25, 0.1)) -> ConsensusResult:
    """Maximize the joint acceptance probability over the opinion space.

    Iterates ``w <- (1 - lam) w + lam T(w)`` with
    ``T(w)_i ∝ psi_i'(d^2(bary(w), x_i))``, retrying with stronger damping
    when the iteration does not settle within ``max_iter`` steps.
    """
    n = len(points)
    if len(spec) != n:
        raise DimensionError("one acceptance function per agent is required")
    if not np.any(spec.alphas > 0):
        raise ParameterError("at least one acceptance slope must be positive")
    if n == 1 or _all_identical(space, points):
        w = uniform_weights(n)
        return ConsensusResult(points[0], w, acceptance_product(space, points, spec, points[0]))

    last = None
    for lam in dampings:
        w = uniform_weights(n)
        for it in range(1, max_iter + 1):
            z = frechet_barycenter(space, points, w)
            target = spec.psi_prime(_sq_to(space, z, points))
            new = (1.0 - lam) * w + lam * target / target.sum()
            step = float(np.abs(new - w).max())
            w = new / new.sum()
            if step <= tol:
                z = frechet_barycenter(space, points, w)
                return ConsensusResult(
                    z, w, acceptance_product(space, points, spec, z), True, it, step,
                    info={"damping": lam},
                )
        last = step
    raise ConvergenceError(
        f"acceptance fixed point did not settle (last step {last:.3e})",
        residual=last, iterations=max_iter,
    )


def gaussian_consensus(measures, spec: LogisticAcceptance, tol: float = 1e-10,
                       max_iter: int = 5_000, damping: float = 0.5) -> ConsensusResult:
    """Endogenous-weight Gaussian consensus.

    Solves jointly for weights ``w_k ∝ psi_k'(W_2^2(P, P_k))`` and the
    covariance equation ``S = sum_k w_k (S^1/2 S_k S^1/2)^1/2``, advancing the
    covariance by one fixed-point step per weight update.
    """
    measures = list(measures)
    n = len(measures)
    if len(spec) != n:
        raise DimensionError("one acceptance function per agent is required")
    if len({m.dim for m in measures}) != 1:
        raise DimensionError("measures have mixed dimensions")
    space = BuresWasserstein()
    if n == 1 or _all_identical(space, measures):
        w = uniform_weights(n)
        return ConsensusResult(measures[0], w, acceptance_product(space, measures, spec, measures[0]))
    if not np.any(spec.alphas > 0):
        raise ParameterError("at least one acceptance slope must be positive")

    means = np.vstack([m.mean for m in measures])
    covs = [m.cov for m in measures]
    w = uniform_weights(n)
    S = sum(wk * Sk for wk, Sk in zip(w, covs))
    for it in range(1, max_iter + 1):
        current = GaussianMeasure(w @ means, S)
        W = np.array([bw_sq_dist(current, m) for m in measures])
        target = spec.psi_prime(W)
        new = (1.0 - damping) * w + damping * target / target.sum()
        step = float(np.abs(new - w).max())
        w = new / new.sum()
        S = bw_fixed_point_step(S, covs, w)
        if step <= tol and bures_residual(S, covs, w) <= tol:
            break
    else:
        raise ConvergenceError(
            f"Gaussian consensus did not converge (weight step {step:.3e})",
            residual=step, iterations=max_iter,
        )
    point = bw_barycenter(measures, w, tol=min(tol, 1e-10))
    return ConsensusResult(point, w, acceptance_product(space, measures, spec, point), True, it,
                           step, info={"residual": bures_residual(point.cov, covs, w)})
