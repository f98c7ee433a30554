import numpy as np
import pytest

from frechet_consensus.errors import ConvergenceError, DimensionError, MatrixError
from frechet_consensus.metric_core import frechet_barycenter
from frechet_consensus.spaces import BuresWasserstein, GaussianMeasure, bw_barycenter, bw_dist
from frechet_consensus.spaces.gaussian import bures_residual, spd_sqrt


def random_spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T + 0.1 * np.eye(d)


def test_one_dimensional_distance_is_exact():
    a = GaussianMeasure([0.0], [[1.0]])
    b = GaussianMeasure([0.0], [[4.0]])
    assert bw_dist(a, b) == 1.0


def test_mean_and_scale_parts_add():
    a = GaussianMeasure([0.0, 0.0], np.eye(2))
    b = GaussianMeasure([3.0, 4.0], 4 * np.eye(2))
    # |m|^2 = 25 plus (2 - 1)^2 per axis
    assert bw_dist(a, b) ** 2 == pytest.approx(27.0, abs=1e-12)


def test_commuting_covariances_closed_form(rng):
    s1, s2 = rng.uniform(0.5, 3, 3), rng.uniform(0.5, 3, 3)
    a = GaussianMeasure(np.zeros(3), np.diag(s1))
    b = GaussianMeasure(np.zeros(3), np.diag(s2))
    assert bw_dist(a, b) ** 2 == pytest.approx(np.sum((np.sqrt(s1) - np.sqrt(s2)) ** 2))


def test_variance_barycenter_in_one_dimension():
    a = GaussianMeasure([0.0], [[1.0]])
    b = GaussianMeasure([0.0], [[4.0]])
    bar = bw_barycenter([a, b], [0.5, 0.5])
    assert bar.cov[0, 0] == pytest.approx(2.25, abs=1e-8)


def test_barycenter_satisfies_fixed_point(rng):
    ms = [GaussianMeasure(rng.normal(size=4), random_spd(rng, 4)) for _ in range(5)]
    w = rng.dirichlet(np.ones(5))
    bar, info = bw_barycenter(ms, w, return_info=True)
    assert info["residual"] <= 1e-10
    assert np.allclose(bar.mean, w @ np.vstack([m.mean for m in ms]))
    assert bures_residual(bar.cov, [m.cov for m in ms], w) <= 1e-9


def test_barycenter_minimizes_frechet_function(rng):
    space = BuresWasserstein()
    ms = [GaussianMeasure(rng.normal(size=2), random_spd(rng, 2)) for _ in range(3)]
    w = np.array([0.2, 0.3, 0.5])
    bar = frechet_barycenter(space, ms, w)

    def F(m):
        return sum(wi * space.sq_dist(m, x) for wi, x in zip(w, ms))

    for _ in range(20):
        E = rng.normal(scale=0.05, size=(2, 2))
        trial = GaussianMeasure(bar.mean, bar.cov + E @ E.T)
        assert F(trial) >= F(bar) - 1e-12


def test_iteration_cap_raises_with_residual(rng):
    ms = [GaussianMeasure(np.zeros(3), random_spd(rng, 3)) for _ in range(3)]
    with pytest.raises(ConvergenceError) as err:
        bw_barycenter(ms, np.ones(3) / 3, tol=1e-300, max_iter=2)
    assert err.value.residual is not None


def test_invalid_covariances():
    with pytest.raises(MatrixError):
        GaussianMeasure([0, 0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(MatrixError):
        GaussianMeasure([0, 0], [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(DimensionError):
        GaussianMeasure([0, 0, 0], np.eye(2))


def test_mixed_dimensions_rejected():
    with pytest.raises(DimensionError):
        bw_dist(GaussianMeasure([0], [[1]]), GaussianMeasure([0, 0], np.eye(2)))


def test_sqrt_squares_back(rng):
    S = random_spd(rng, 4)
    R = spd_sqrt(S)
    assert np.allclose(R @ R, S)


def test_chart_and_json_round_trip(rng):
    space = BuresWasserstein()
    m = GaussianMeasure(rng.normal(size=3), random_spd(rng, 3))
    back = space.from_chart(space.to_chart(m))
    assert np.allclose(back.cov, m.cov) and np.allclose(back.mean, m.mean)
    again = space.point_from_json(space.point_to_json(m))
    assert np.array_equal(again.cov, m.cov)
