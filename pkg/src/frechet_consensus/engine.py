"""Evolutionary consensus scheme.

Each step ``t = 1, 2, ...`` performs, synchronously for all agents:

1. optional time-preference update of ``r_i``;
2. interaction-weight update ``w_ij <- theta_i w_ij + (1 - theta_i) R_ij`` with
   ``R_i`` the softmax of ``-r_i d^2(x_i, x_j)`` over the neighbourhood;
3. opinion update to the local barycenter of the neighbours' positions;
4. a global proposal (uniform-weight barycenter of all positions) and the
   acceptance check ``q_i = exp(-rho_i t d^2(x_i, x_B))``, ``P = prod_i q_i``.

The run stops when the group accepts or ``max_steps`` is reached.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConsensusError, ConvergenceError, DimensionError, ParameterError
from .harness.rng import agent_stream
from .metric_core import MetricSpace, frechet_barycenter, uniform_weights

log = logging.getLogger(__name__)

ROW_TOL = 1e-12


@dataclass(frozen=True)
class AgentProfile:
    """Behavioural parameters of one agent.

    theta: weight inertia in [0, 1]; rho: acceptance sensitivity (> 0);
    r: consensus-speed preference (>= 0); epsilon: deviation radius (> 0).
    """

    theta: float
    rho: float
    r: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError(f"theta must lie in [0, 1], got {self.theta!r}")
        if not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho!r}")
        if not self.r >= 0:
            raise ParameterError(f"r must be nonnegative, got {self.r!r}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")


def mean_profile(profiles: Sequence[AgentProfile]) -> AgentProfile:
    arr = np.array([[p.theta, p.rho, p.r, p.epsilon] for p in profiles])
    return AgentProfile(*(float(v) for v in arr.mean(axis=0)))


@dataclass
class InteractionGraph:
    """Adjacency (with self loops) and row-stochastic interaction weights."""

    adjacency: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=bool)
        self.weights = np.asarray(self.weights, dtype=float)
        n = self.adjacency.shape[0]
        if self.adjacency.shape != (n, n) or self.weights.shape != (n, n):
            raise DimensionError("adjacency and weights must be square and of equal size")
        if not np.all(np.diag(self.adjacency)):
            raise ParameterError("every agent must neighbour itself")
        if np.any(self.weights < 0) or np.any(self.weights[~self.adjacency] != 0):
            raise ParameterError("weights must be nonnegative and supported on the adjacency")
        if np.abs(self.weights.sum(axis=1) - 1.0).max() > ROW_TOL:
            raise ParameterError("weight rows must sum to one")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    @classmethod
    def from_adjacency(cls, adjacency) -> "InteractionGraph":
        adj = np.asarray(adjacency, dtype=bool).copy()
        np.fill_diagonal(adj, True)
        return cls(adj, adj / adj.sum(axis=1, keepdims=True))

    @classmethod
    def complete(cls, n: int) -> "InteractionGraph":
        return cls.from_adjacency(np.ones((n, n), dtype=bool))

    @classmethod
    def knn(cls, space: MetricSpace, points, k: int) -> "InteractionGraph":
        n = len(points)
        d2 = space.pairwise_sq(points, points)
        adj = np.zeros((n, n), dtype=bool)
        k = min(k, n - 1)
        for i in range(n):
            order = [j for j in np.argsort(d2[i], kind="stable") if j != i]
            adj[i, order[:k]] = True
        return cls.from_adjacency(adj)

    @classmethod
    def erdos_renyi(cls, n: int, p: float, rng: np.random.Generator, max_tries: int = 1000):
        """Symmetric random graph, re-drawn until every agent has a neighbour."""
        if n == 1:
            return cls.complete(1)
        for _ in range(max_tries):
            upper = np.triu(rng.random((n, n)) < p, k=1)
            adj = upper | upper.T
            if np.all(adj.sum(axis=1) > 0):
                return cls.from_adjacency(adj)
        raise ParameterError(f"no Erdos-Renyi graph without isolated agents after {max_tries} draws")


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for the initial graph: ``complete``, ``knn`` or ``erdos_renyi``."""

    topology: str = "complete"
    k: int = 5
    p: float = 0.5

    def build(self, space: MetricSpace, points, rng: np.random.Generator | None = None):
        n = len(points)
        if self.topology == "complete":
            return InteractionGraph.complete(n)
        if self.topology == "knn":
            return InteractionGraph.knn(space, points, self.k)
        if self.topology == "erdos_renyi":
            return InteractionGraph.erdos_renyi(n, self.p, rng or np.random.default_rng(0))
        raise ParameterError(f"unknown graph topology {self.topology!r}")


@dataclass(frozen=True)
class EngineConfig:
    p_stop: float = 0.95
    max_steps: int = 500
    acceptance_mode: str = "threshold"
    time_update: bool = False
    seed: int = 0
    record_positions: bool = True

    def __post_init__(self):
        if self.acceptance_mode not in ("threshold", "bernoulli"):
            raise ParameterError(f"unknown acceptance mode {self.acceptance_mode!r}")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be at least 1")
        if not 0.0 < self.p_stop <= 1.0:
            raise ParameterError("p_stop must lie in (0, 1]")


@dataclass
class EngineState:
    space: MetricSpace
    positions: list
    anchors: list
    graph: InteractionGraph
    theta: np.ndarray
    rho: np.ndarray
    r: np.ndarray
    epsilon: np.ndarray
    t: int = 0
    rngs: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.positions)

    @classmethod
    def create(cls, space, anchors, profiles, graph, seed=0, agent_ids=None):
        anchors = list(anchors)
        n = len(anchors)
        if len(profiles) != n or graph.n != n:
            raise DimensionError("anchors, profiles and graph sizes disagree")
        arr = np.array([[p.theta, p.rho, p.r, p.epsilon] for p in profiles], dtype=float)
        ids = range(n) if agent_ids is None else agent_ids
        return cls(
            space=space,
            positions=list(anchors),
            anchors=anchors,
            graph=InteractionGraph(graph.adjacency.copy(), graph.weights.copy()),
            theta=arr[:, 0].copy(),
            rho=arr[:, 1].copy(),
            r=arr[:, 2].copy(),
            epsilon=arr[:, 3].copy(),
            rngs=[agent_stream(seed, i) for i in ids],
        )


@dataclass
class StepRecord:
    t: int
    proposal: object
    distances: np.ndarray
    q: np.ndarray
    P: float
    accepted: bool
    positions: list | None = None
    r: np.ndarray | None = None


@dataclass
class SimulationTrace:
    steps: list = field(default_factory=list)
    converged: bool = False
    consensus: object = None
    n_agents: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def mean_distance(self) -> np.ndarray:
        return np.array([s.distances.mean() for s in self.steps])

    def mean_acceptance(self) -> np.ndarray:
        return np.array([s.q.mean() for s in self.steps])


def weight_update(state: EngineState) -> np.ndarray:
    """New row-stochastic weights blending old rows with the softmax attraction."""
    adj = state.graph.adjacency
    d2 = state.space.pairwise_sq(state.positions, state.positions)
    logits = np.where(adj, -state.r[:, None] * d2, -np.inf)
    logits -= logits.max(axis=1, keepdims=True)
    R = np.where(adj, np.exp(logits), 0.0)
    R /= R.sum(axis=1, keepdims=True)
    theta = state.theta[:, None]
    W = theta * state.graph.weights + (1.0 - theta) * R
    return W / W.sum(axis=1, keepdims=True)


def opinion_update(state: EngineState, weights: np.ndarray) -> list:
    """Move every agent to the barycenter of its neighbours under its weight row."""
    try:
        return state.space.barycenters(state.positions, weights)
    except ConsensusError:
        for i, row in enumerate(weights):
            try:
                support = np.flatnonzero(row > 0)
                frechet_barycenter(state.space, [state.positions[j] for j in support],
                                   row[support] / row[support].sum())
            except ConsensusError as exc:
                raise ConvergenceError(f"local barycenter failed for agent {i}: {exc}") from exc
        raise


def global_proposal(state: EngineState):
    return frechet_barycenter(state.space, state.positions, uniform_weights(state.n))


def acceptance_probability(i: int, state: EngineState, proposal) -> float:
    if state.t < 1:
        raise ParameterError("acceptance is evaluated from t = 1 on")
    d2 = state.space.sq_dist(state.positions[i], proposal)
    return float(np.exp(-state.rho[i] * state.t * d2))


def group_acceptance(qs, mode: str = "threshold", p_stop: float = 0.95, rngs=None):
    """Joint acceptance ``P = prod q_i`` and the stop decision.

    ``threshold`` accepts when ``P >= p_stop``; ``bernoulli`` lets each agent
    accept with probability ``q_i`` using its own generator and accepts when
    all agents do. One uniform is drawn per agent per call either way in
    bernoulli mode, so streams stay aligned.
    """
    qs = np.asarray(qs, dtype=float)
    if np.any(qs <= 0) or np.any(qs > 1):
        raise ParameterError("acceptance probabilities must lie in (0, 1]")
    P = float(np.exp(np.sum(np.log(qs))))
    if mode == "threshold":
        return P, P >= p_stop
    if mode == "bernoulli":
        if rngs is None or len(rngs) != qs.size:
            raise ParameterError("bernoulli mode needs one generator per agent")
        draws = np.array([g.random() for g in rngs])
        return P, bool(np.all(draws < qs))
    raise ParameterError(f"unknown acceptance mode {mode!r}")


def time_preference_update(i: int, state: EngineState) -> float:
    """Consensus-speed preference from the anchor's distance to the neighbours.

    Zero when every neighbour lies within ``epsilon_i`` (in squared distance)
    of agent ``i``'s anchor; otherwise the weighted squared distance
    discounted by ``exp(-rho_i t)``.
    """
    nbrs = state.graph.neighbors(i)
    d2 = state.space.pairwise_sq([state.anchors[i]], [state.positions[j] for j in nbrs])[0]
    if np.all(d2 <= state.epsilon[i]):
        return 0.0
    return float(np.exp(-state.rho[i] * state.t) * (state.graph.weights[i, nbrs] @ d2))


def step(state: EngineState, config: EngineConfig) -> StepRecord:
    state.t += 1
    if config.time_update:
        state.r = np.array([time_preference_update(i, state) for i in range(state.n)])
    W = weight_update(state)
    state.positions = opinion_update(state, W)
    state.graph.weights = W
    proposal = global_proposal(state)
    d2 = state.space.pairwise_sq(state.positions, [proposal])[:, 0]
    # floor keeps q strictly positive when rho * t * d^2 is huge
    q = np.exp(np.maximum(-state.rho * state.t * d2, -700.0))
    P, accepted = group_acceptance(q, config.acceptance_mode, config.p_stop, state.rngs)
    return StepRecord(
        t=state.t,
        proposal=proposal,
        distances=np.sqrt(d2),
        q=q,
        P=P,
        accepted=bool(accepted),
        positions=list(state.positions) if config.record_positions else None,
        r=state.r.copy() if config.time_update else None,
    )


def run_consensus(space: MetricSpace, anchors, profiles, graph=None,
                  config: EngineConfig | None = None, agent_ids=None) -> SimulationTrace:
    """Iterate the scheme until the group accepts a proposal or ``max_steps``.

    ``graph`` may be an :class:`InteractionGraph`, a :class:`GraphSpec` or
    ``None`` (complete graph). ``agent_ids`` select the per-agent random
    substreams; they default to ``0..n-1``.
    """
    config = config or EngineConfig()
    anchors = list(anchors)
    if not anchors:
        raise DimensionError("at least one agent is required")
    if graph is None:
        graph = InteractionGraph.complete(len(anchors))
    elif isinstance(graph, GraphSpec):
        graph = graph.build(space, anchors, agent_stream(config.seed, "graph"))
    state = EngineState.create(space, anchors, profiles, graph, config.seed, agent_ids)
    trace = SimulationTrace(n_agents=state.n)
    while state.t < config.max_steps:
        rec = step(state, config)
        trace.steps.append(rec)
        if rec.accepted:
            trace.converged = True
            trace.consensus = rec.proposal
            break
    if not trace.converged:
        log.info("no consensus within %d steps", config.max_steps)
    return trace
