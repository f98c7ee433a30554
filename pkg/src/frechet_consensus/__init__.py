"""Consensus formation in metric opinion spaces.

Agents hold opinions that are points of a metric space (vectors, 1-D
probability laws, Gaussian measures or discount-rate curves). Group opinions
are Fréchet barycenters; consensus is reached either in one shot or through an
evolutionary scheme of weight updates, local barycenters and acceptance checks.
"""

from .clustering import kmeans, two_stage_consensus
from .consensus_points import (
    DeviationProfile,
    LogisticAcceptance,
    acceptance_product,
    gaussian_consensus,
    geometric_consensus,
    probabilistic_consensus,
)
from .engine import AgentProfile, EngineConfig, GraphSpec, InteractionGraph, run_consensus
from .metric_core import MetricSpace, frechet_barycenter, frechet_function, frechet_variance

__version__ = "0.1.0"

__all__ = [
    "AgentProfile",
    "DeviationProfile",
    "EngineConfig",
    "GraphSpec",
    "InteractionGraph",
    "LogisticAcceptance",
    "MetricSpace",
    "acceptance_product",
    "frechet_barycenter",
    "frechet_function",
    "frechet_variance",
    "gaussian_consensus",
    "geometric_consensus",
    "kmeans",
    "probabilistic_consensus",
    "run_consensus",
    "two_stage_consensus",
]
