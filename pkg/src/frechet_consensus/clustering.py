"""K-means in a metric opinion space and the two-stage consensus pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    EngineConfig,
    GraphSpec,
    SimulationTrace,
    mean_profile,
    run_consensus,
)
from .errors import DimensionError, ParameterError
from .harness.rng import agent_stream
from .metric_core import MetricSpace, frechet_barycenter, frechet_variance, uniform_weights

log = logging.getLogger(__name__)

# stream ids of the fictitious stage-two agents start here
FICTITIOUS_STREAM_OFFSET = 1_000_000


@dataclass
class ClusterAssignment:
    """Labels are 0-based cluster indices."""

    labels: np.ndarray
    centers: list
    within_variances: np.ndarray
    objective_history: list = field(default_factory=list)
    rounds: int = 0

    @property
    def k(self) -> int:
        return len(self.centers)

    @property
    def objective(self) -> float:
        return self.objective_history[-1] if self.objective_history else 0.0

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)


def assign_step(space: MetricSpace, points, centers) -> np.ndarray:
    """Nearest-center labels; ties go to the lowest index."""
    if len(centers) < 1:
        raise DimensionError("at least one center is required")
    return np.argmin(space.pairwise_sq(points, centers), axis=1)


def update_centers(space: MetricSpace, points, labels, k: int) -> list:
    """Uniform-weight Fréchet mean of every cluster.

    An empty cluster is re-seeded with the point farthest from the center
    it is currently assigned to.
    """
    labels = np.asarray(labels)
    out = [None] * k
    for j in range(k):
        idx = np.flatnonzero(labels == j)
        if idx.size:
            members = [points[i] for i in idx]
            out[j] = frechet_barycenter(space, members, uniform_weights(len(members)))
    empty = [j for j in range(k) if out[j] is None]
    if empty:
        # every point sits in a non-empty cluster; distance to its own center
        own = np.array([space.sq_dist(p, out[lab]) for p, lab in zip(points, labels)])
        order = np.argsort(-own, kind="stable")
        for j, pick in zip(empty, order):
            out[j] = points[pick]
    return out


def farthest_point_seeds(space: MetricSpace, points, k: int, rng: np.random.Generator) -> list:
    """Seeded random first center, then greedily the point farthest from all chosen."""
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = space.pairwise_sq(points, [points[chosen[0]]])[:, 0]
    while len(chosen) < k:
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, space.pairwise_sq(points, [points[nxt]])[:, 0])
    return [points[i] for i in chosen]


def _objective(space, points, labels, centers) -> float:
    d2 = space.pairwise_sq(points, centers)
    return float(d2[np.arange(len(points)), labels].sum())


def kmeans(space: MetricSpace, points, k: int, init=None, seed: int = 0,
           tol: float = 1e-8, max_rounds: int = 200) -> ClusterAssignment:
    """Metric-space K-means (Lloyd iterations with Fréchet-mean centers).

    ``init`` may be a list of initial centers; otherwise centers come from
    farthest-point seeding under ``seed``. The recorded objective is taken
    after each center update and is non-increasing.
    """
    points = list(points)
    n = len(points)
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= K <= N, got K={k}, N={n}")
    centers = list(init) if init is not None else farthest_point_seeds(
        space, points, k, agent_stream(seed, "kmeans"))
    if len(centers) != k:
        raise DimensionError("number of initial centers differs from K")
    history = []
    rounds = 0
    labels = assign_step(space, points, centers)
    while rounds < max_rounds:
        rounds += 1
        new_centers = update_centers(space, points, labels, k)
        history.append(_objective(space, points, labels, new_centers))
        shift = max(space.dist(a, b) for a, b in zip(centers, new_centers))
        centers = new_centers
        new_labels = assign_step(space, points, centers)
        if shift <= tol and np.array_equal(new_labels, labels):
            break
        labels = new_labels
    variances = np.array([
        frechet_variance(space, [points[i] for i in np.flatnonzero(labels == j)],
                         uniform_weights(int((labels == j).sum())))
        if np.any(labels == j) else 0.0
        for j in range(k)
    ])
    return ClusterAssignment(labels, centers, variances, history, rounds)


def elbow_report(space: MetricSpace, points, ks, seed: int = 0) -> list:
    """K-means objective for each candidate K (no automatic choice is made)."""
    return [{"k": int(k), "objective": kmeans(space, points, int(k), seed=seed).objective}
            for k in ks]


@dataclass
class TwoStageResult:
    clustering: ClusterAssignment
    local_traces: list
    global_trace: SimulationTrace
    partial: bool

    @property
    def local_steps(self) -> list:
        return [t.n_steps for t in self.local_traces]

    @property
    def global_steps(self) -> int:
        if self.clustering.k == 1:
            return 0
        return self.global_trace.n_steps

    @property
    def total_steps_avg(self) -> float:
        return float(np.mean(self.local_steps)) + self.global_steps

    @property
    def total_steps_worst(self) -> int:
        return int(max(self.local_steps)) + self.global_steps

    @property
    def consensus(self):
        return self.global_trace.consensus


def two_stage_consensus(space: MetricSpace, anchors, profiles, k: int,
                        config: EngineConfig | None = None, graph: GraphSpec | None = None,
                        clustering: ClusterAssignment | None = None) -> TwoStageResult:
    """Cluster, reach consensus inside each cluster, then across cluster consensus points.

    The stage-two agents sit at the local consensus points (or the last
    proposal of a cluster that did not converge) and carry the mean profile
    of their cluster. With ``K = 1`` the single local run is the result.
    """
    config = config or EngineConfig()
    graph = graph or GraphSpec()
    anchors = list(anchors)
    if not 1 <= k <= len(anchors):
        raise ParameterError(f"need 1 <= K <= N, got K={k}")
    clustering = clustering or kmeans(space, anchors, k, seed=config.seed)
    local = []
    for j in range(k):
        idx = clustering.members(j)
        local.append(run_consensus(
            space, [anchors[i] for i in idx], [profiles[i] for i in idx],
            graph=graph, config=config, agent_ids=[int(i) for i in idx],
        ))
    partial = not all(t.converged for t in local)
    if partial:
        log.warning("%d of %d local runs hit max_steps", sum(not t.converged for t in local), k)
    if k == 1:
        return TwoStageResult(clustering, local, local[0], partial)
    reps = [t.consensus if t.converged else t.steps[-1].proposal for t in local]
    fict = [mean_profile([profiles[i] for i in clustering.members(j)]) for j in range(k)]
    glob = run_consensus(space, reps, fict, graph=graph, config=config,
                         agent_ids=[FICTITIOUS_STREAM_OFFSET + j for j in range(k)])
    return TwoStageResult(clustering, local, glob, partial or not glob.converged)
