import numpy as np
import pytest

from frechet_consensus.consensus_points import (
    DeviationProfile,
    LogisticAcceptance,
    acceptance_product,
    gaussian_consensus,
    geometric_consensus,
    geometric_consensus_general,
    probabilistic_consensus,
)
from frechet_consensus.errors import DimensionError, ParameterError
from frechet_consensus.spaces import Euclidean, GaussianMeasure, QuantileFunction, Wasserstein1D
from frechet_consensus.spaces.gaussian import bw_sq_dist

E = Euclidean()


def enclosing_radius_sq(points):
    """Brute-force minimal enclosing circle (squared radius) of a small planar set."""
    P = np.asarray(points)
    best = np.inf
    cands = []
    n = len(P)
    for i in range(n):
        for j in range(i + 1, n):
            cands.append((P[i] + P[j]) / 2)
            for k in range(j + 1, n):
                a, b, c = P[i], P[j], P[k]
                d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
                if abs(d) < 1e-14:
                    continue
                ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
                uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
                cands.append(np.array([ux, uy]))
    for z in cands:
        r = np.max(np.sum((P - z) ** 2, axis=1))
        best = min(best, r)
    return best


def test_symmetric_pair_midpoint():
    res = geometric_consensus(E, [np.array([-1.0]), np.array([1.0])])
    assert res.point == pytest.approx([0.0])
    assert res.objective == pytest.approx(1.0)
    assert res.weights == pytest.approx([0.5, 0.5])


def test_equilateral_triangle():
    pts = [np.array([np.cos(a), np.sin(a)]) for a in 2 * np.pi * np.arange(3) / 3]
    res = geometric_consensus(E, pts)
    assert res.objective == pytest.approx(1.0, abs=1e-6)
    assert res.point == pytest.approx([0, 0], abs=1e-6)


def test_obtuse_triangle_uses_longest_side():
    pts = [np.array([0.0, 0.0]), np.array([4.0, 0.0]), np.array([2.0, 0.5])]
    res = geometric_consensus(E, pts)
    assert res.objective == pytest.approx(4.0, abs=1e-6)
    assert res.weights[2] == pytest.approx(0.0, abs=1e-9)


def test_matches_enclosing_circle(rng):
    for _ in range(10):
        pts = list(rng.uniform(-1, 1, size=(rng.integers(3, 7), 2)))
        res = geometric_consensus(E, pts)
        assert res.objective == pytest.approx(enclosing_radius_sq(pts), abs=1e-6)
        assert res.gap <= 1e-6
        assert res.info["dual_value"] <= res.objective + 1e-12


def test_identical_and_single_points():
    p = np.array([1.0, 2.0])
    assert geometric_consensus(E, [p]).objective == 0.0
    assert geometric_consensus(E, [p, p.copy()]).objective == 0.0


def test_feasibility_flag():
    pts = [np.array([-1.0]), np.array([1.0])]
    assert geometric_consensus(E, pts, DeviationProfile([1.5, 2.0])).feasible
    assert not geometric_consensus(E, pts, DeviationProfile([0.5, 2.0])).feasible


def test_deviation_profile_validation():
    with pytest.raises(ParameterError):
        DeviationProfile([1.0, 0.0])
    with pytest.raises(DimensionError):
        DeviationProfile([1.0, 1.0], thetas=[1.0])


def test_general_problem_is_theta_weighted_mean():
    pts = [np.array([0.0]), np.array([3.0])]
    res = geometric_consensus_general(E, pts, DeviationProfile([5.0, 5.0], thetas=[2.0, 1.0]))
    assert res.point == pytest.approx([1.0])
    assert res.feasible and res.flags.all()


def test_general_problem_flags_and_bounds():
    pts = [np.array([0.0]), np.array([3.0])]
    prof = DeviationProfile([5.0, 1.0], thetas=[2.0, 1.0])
    res = geometric_consensus_general(E, pts, prof)
    assert list(res.flags) == [True, False]
    fixed = geometric_consensus_general(E, pts, prof, enforce_bounds=True)
    assert fixed.feasible
    assert fixed.point == pytest.approx([2.0], abs=1e-6)


def test_logistic_acceptance_values():
    spec = LogisticAcceptance([1.0, 0.0])
    assert spec.phi(0.0) == pytest.approx([0.25, 0.25])
    s = np.linspace(0, 5, 20)
    assert np.all(np.diff(LogisticAcceptance([2.0]).phi(s)) < 0)
    with pytest.raises(ParameterError):
        LogisticAcceptance([-1.0])


def test_acceptance_product():
    pts = [np.array([0.0]), np.array([0.0])]
    spec = LogisticAcceptance([1.0, 3.0])
    assert acceptance_product(E, pts, spec, np.array([0.0])) == pytest.approx(1 / 16)


def test_probabilistic_symmetric_pair():
    res = probabilistic_consensus(E, [np.array([-1.0]), np.array([1.0])], LogisticAcceptance([2, 2]))
    assert res.point == pytest.approx([0.0], abs=1e-9)
    assert res.weights == pytest.approx([0.5, 0.5])


def test_probabilistic_single_agent():
    res = probabilistic_consensus(E, [np.array([3.0])], LogisticAcceptance([1.0]))
    assert res.point == pytest.approx([3.0]) and res.objective == pytest.approx(0.25)


def test_probabilistic_matches_grid_search(rng):
    for _ in range(5):
        n = rng.integers(2, 5)
        pts = [np.array([x]) for x in rng.uniform(-2, 2, n)]
        spec = LogisticAcceptance(rng.uniform(0.2, 3.0, n))
        res = probabilistic_consensus(E, pts, spec)
        grid = np.arange(-3, 3, 1e-4)
        logp = sum(LogisticAcceptance([a]).log_phi((grid - p[0]) ** 2)
                   for a, p in zip(spec.alphas, pts))
        assert res.point[0] == pytest.approx(grid[np.argmax(logp)], abs=1e-3)
        assert np.all(res.weights > 0)


def test_probabilistic_needs_a_positive_slope():
    with pytest.raises(ParameterError):
        probabilistic_consensus(E, [np.array([0.0]), np.array([1.0])], LogisticAcceptance([0, 0]))


def test_probabilistic_in_wasserstein_space():
    pts = [QuantileFunction.normal(0, 1), QuantileFunction.normal(2, 1)]
    res = probabilistic_consensus(Wasserstein1D(), pts, LogisticAcceptance([1.0, 1.0]))
    assert np.allclose(res.point.values, QuantileFunction.normal(1, 1).values, atol=1e-9)


def test_gaussian_consensus_symmetric():
    ms = [GaussianMeasure([-1.0], [[1.0]]), GaussianMeasure([1.0], [[4.0]])]
    res = gaussian_consensus(ms, LogisticAcceptance([1.0, 1.0]))
    assert res.weights == pytest.approx([0.5, 0.5], abs=1e-9)
    assert res.point.cov[0, 0] == pytest.approx(2.25, abs=1e-8)


def test_gaussian_consensus_fixed_point(rng):
    ms = []
    for _ in range(4):
        A = rng.normal(size=(2, 2))
        ms.append(GaussianMeasure(rng.normal(size=2), A @ A.T + 0.2 * np.eye(2)))
    spec = LogisticAcceptance(rng.uniform(0.5, 2.0, 4))
    res = gaussian_consensus(ms, spec)
    assert res.info["residual"] <= 1e-9
    target = spec.psi_prime(np.array([bw_sq_dist(res.point, m) for m in ms]))
    assert res.weights == pytest.approx(target / target.sum(), abs=1e-8)
