import numpy as np
import pytest

from frechet_consensus.engine import (
    AgentProfile,
    EngineConfig,
    EngineState,
    GraphSpec,
    InteractionGraph,
    acceptance_probability,
    group_acceptance,
    mean_profile,
    run_consensus,
    step,
    time_preference_update,
    weight_update,
)
from frechet_consensus.errors import DimensionError, ParameterError
from frechet_consensus.harness.rng import agent_stream
from frechet_consensus.spaces import Euclidean, QuantileFunction, SDRCurveParams, SDRCurveSpace, Wasserstein1D

E = Euclidean()


def profiles(n, theta=0.5, rho=1.0, r=1.0, eps=0.1):
    return [AgentProfile(theta, rho, r, eps) for _ in range(n)]


def random_scenario(seed, n=12):
    rng = np.random.default_rng(seed)
    X = list(rng.normal(size=(n, 2)))
    P = [AgentProfile(rng.uniform(0, 1), rng.uniform(0.5, 2), rng.uniform(0, 1), 0.1)
         for _ in range(n)]
    return X, P


def test_profile_ranges():
    with pytest.raises(ParameterError):
        AgentProfile(1.5, 1.0, 1.0, 0.1)
    with pytest.raises(ParameterError):
        AgentProfile(0.5, 0.0, 1.0, 0.1)
    with pytest.raises(ParameterError):
        AgentProfile(0.5, 1.0, -1.0, 0.1)
    with pytest.raises(ParameterError):
        AgentProfile(0.5, 1.0, 1.0, 0.0)


def test_mean_profile():
    m = mean_profile([AgentProfile(0.0, 1.0, 0.0, 1.0), AgentProfile(1.0, 3.0, 2.0, 3.0)])
    assert (m.theta, m.rho, m.r, m.epsilon) == (0.5, 2.0, 1.0, 2.0)


def test_graph_invariants():
    g = InteractionGraph.complete(4)
    assert np.all(np.diag(g.adjacency)) and np.allclose(g.weights.sum(axis=1), 1)
    with pytest.raises(ParameterError):
        InteractionGraph(np.zeros((2, 2), bool), np.eye(2))
    with pytest.raises(ParameterError):
        InteractionGraph(np.eye(2, dtype=bool), np.full((2, 2), 0.5))


def test_knn_graph_and_erdos_renyi():
    X = [np.array([float(i)]) for i in range(6)]
    g = InteractionGraph.knn(E, X, 2)
    assert list(g.neighbors(0)) == [0, 1, 2]
    er = InteractionGraph.erdos_renyi(10, 0.3, agent_stream(1, "graph"))
    assert np.array_equal(er.adjacency, er.adjacency.T)
    assert np.all(er.adjacency.sum(axis=1) >= 2)
    with pytest.raises(ParameterError):
        GraphSpec("ring").build(E, X)


def test_weight_update_rows_stay_on_simplex():
    X, P = random_scenario(0)
    g = GraphSpec("erdos_renyi", p=0.4).build(E, X, agent_stream(0, "graph"))
    s = EngineState.create(E, X, P, g)
    W = weight_update(s)
    assert np.abs(W.sum(axis=1) - 1).max() <= 1e-12
    assert np.all(W[~g.adjacency] == 0)


def test_weight_update_full_inertia_keeps_weights():
    X, P = random_scenario(1)
    P = [AgentProfile(1.0, p.rho, p.r, p.epsilon) for p in P]
    s = EngineState.create(E, X, P, InteractionGraph.complete(len(X)))
    assert np.allclose(weight_update(s), s.graph.weights)


def test_weight_update_zero_inertia_is_softmax():
    X = [np.array([0.0]), np.array([1.0]), np.array([3.0])]
    s = EngineState.create(E, X, profiles(3, theta=0.0, r=2.0), InteractionGraph.complete(3))
    W = weight_update(s)
    logits = -2.0 * np.array([0.0, 1.0, 9.0])
    expected = np.exp(logits) / np.exp(logits).sum()
    assert W[0] == pytest.approx(expected)


def test_acceptance_probability_values():
    X = [np.array([0.0]), np.array([1.0])]
    s = EngineState.create(E, X, profiles(2, rho=np.log(2)), InteractionGraph.complete(2))
    s.t = 1
    assert acceptance_probability(0, s, np.array([0.0])) == 1.0
    assert acceptance_probability(1, s, np.array([0.0])) == pytest.approx(0.5)
    s.t = 0
    with pytest.raises(ParameterError):
        acceptance_probability(0, s, np.array([0.0]))


def test_group_acceptance_modes():
    assert group_acceptance([1.0, 1.0]) == (1.0, True)
    P, ok = group_acceptance([0.9, 0.9], p_stop=0.95)
    assert P == pytest.approx(0.81) and not ok
    rngs = [agent_stream(0, i) for i in range(3)]
    assert group_acceptance([1.0, 1.0, 1.0], "bernoulli", rngs=rngs)[1]
    with pytest.raises(ParameterError):
        group_acceptance([0.5], "bernoulli")
    with pytest.raises(ParameterError):
        group_acceptance([0.0])


def test_time_preference_update():
    X = [np.array([0.0]), np.array([0.1]), np.array([2.0])]
    s = EngineState.create(E, X, profiles(3, rho=0.5, eps=0.05), InteractionGraph.complete(3))
    s.t = 1
    # agent 0: squared distances 0, 0.01, 4 -> not all within epsilon
    expected = np.exp(-0.5) * (np.array([0.0, 0.01, 4.0]) @ s.graph.weights[0])
    assert time_preference_update(0, s) == pytest.approx(expected)
    near = EngineState.create(E, X[:2], profiles(2, eps=0.05), InteractionGraph.complete(2))
    near.t = 1
    assert time_preference_update(0, near) == 0.0


def test_identical_anchors_accept_immediately():
    X = [np.array([1.0, 2.0])] * 5
    tr = run_consensus(E, X, profiles(5))
    assert tr.converged and tr.n_steps == 1 and tr.steps[0].P == 1.0
    assert np.array_equal(tr.consensus, [1.0, 2.0])


def test_single_agent():
    tr = run_consensus(E, [np.array([3.0])], profiles(1))
    assert tr.converged and tr.n_steps == 1
    assert np.array_equal(tr.consensus, [3.0])


def test_two_point_contraction():
    X = [np.array([0.0]), np.array([2.0])]
    tr = run_consensus(E, X, profiles(2, theta=0.0, rho=5.0, r=0.5))
    d = tr.mean_distance()
    assert d[-1] < d[0]
    assert tr.converged and tr.consensus == pytest.approx([1.0])
    for rec in tr.steps:
        assert all(0 <= p[0] <= 2 for p in rec.positions)


def test_max_steps_gives_no_consensus_marker():
    X = [np.array([-10.0]), np.array([10.0])]
    # no edges: nobody ever moves
    isolated = InteractionGraph.from_adjacency(np.zeros((2, 2), dtype=bool))
    tr = run_consensus(E, X, profiles(2), graph=isolated, config=EngineConfig(max_steps=3))
    assert not tr.converged and tr.consensus is None and tr.n_steps == 3


def test_seed_determinism_bernoulli():
    X, P = random_scenario(5)
    cfg = EngineConfig(acceptance_mode="bernoulli", seed=42)
    a = run_consensus(E, X, P, graph=GraphSpec("erdos_renyi", p=0.5), config=cfg)
    b = run_consensus(E, X, P, graph=GraphSpec("erdos_renyi", p=0.5), config=cfg)
    assert a.n_steps == b.n_steps
    for ra, rb in zip(a.steps, b.steps):
        assert np.array_equal(ra.q, rb.q) and ra.accepted == rb.accepted


def test_time_update_records_rates():
    X, P = random_scenario(2, n=6)
    tr = run_consensus(E, X, P, config=EngineConfig(time_update=True, max_steps=20))
    assert tr.steps[0].r is not None and np.all(tr.steps[0].r >= 0)


def test_mismatched_sizes():
    with pytest.raises(DimensionError):
        run_consensus(E, [np.array([0.0])] * 2, profiles(3))


def test_runs_in_wasserstein_space():
    X = [QuantileFunction.normal(m, 1 + m / 4) for m in (0.0, 1.0, 2.0)]
    tr = run_consensus(Wasserstein1D(), X, profiles(3, rho=2.0))
    assert tr.converged
    assert np.all(np.diff(tr.consensus.values) >= 0)


def test_runs_in_sdr_space():
    X = [SDRCurveParams(g, 0.03, 0.979, 0.0) for g in (0.8, 1.0, 1.3)]
    tr = run_consensus(SDRCurveSpace("curve"), X, profiles(3, rho=2.0))
    assert tr.converged and isinstance(tr.consensus, SDRCurveParams)


@pytest.mark.parametrize("seed", range(5))
def test_first_step_keeps_rows_stochastic(seed):
    X, P = random_scenario(seed)
    s = EngineState.create(E, X, P, InteractionGraph.complete(len(X)))
    step(s, EngineConfig())
    assert np.abs(s.graph.weights.sum(axis=1) - 1).max() <= 1e-12
