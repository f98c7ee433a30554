import numpy as np
import pytest

from frechet_consensus.errors import DimensionError
from frechet_consensus.metric_core import frechet_barycenter
from frechet_consensus.spaces import Euclidean


def test_distance_is_norm():
    assert Euclidean().dist([0, 0], [3, 4]) == 5.0


def test_barycenter_is_weighted_mean(rng):
    X = rng.normal(size=(7, 3))
    w = rng.dirichlet(np.ones(7))
    assert np.allclose(frechet_barycenter(Euclidean(3), list(X), w), w @ X, atol=1e-12)


def test_dimension_enforced():
    with pytest.raises(DimensionError):
        Euclidean(2).dist([0, 0], [1, 2, 3])


def test_pairwise_matches_scalar(rng):
    E = Euclidean()
    A, B = list(rng.normal(size=(4, 2))), list(rng.normal(size=(3, 2)))
    expected = np.array([[E.sq_dist(a, b) for b in B] for a in A])
    assert np.allclose(E.pairwise_sq(A, B), expected)


def test_batched_barycenters_match_rows(rng):
    E = Euclidean()
    X = list(rng.normal(size=(5, 2)))
    W = rng.dirichlet(np.ones(5), size=3)
    for row, z in zip(W, E.barycenters(X, W)):
        assert np.allclose(z, frechet_barycenter(E, X, row))


def test_json_round_trip():
    E = Euclidean()
    p = np.array([0.1, -2.5e-17, 3.0])
    assert np.array_equal(E.point_from_json(E.point_to_json(p)), p)
