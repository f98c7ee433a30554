"""Consensus on social discount rates and on a contingency distribution.

Agents hold SDR curves generated by the Gollier consumption model with
individually sampled parameters, and separately a GEV model for a future
contingency ``X(t)``. Consensus is reached in either space by the
evolutionary engine (one- or two-stage), and an agreed curve and
distribution value the contingency as ``K(0, t) = E[exp(-r(t) t) X(t)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import TwoStageResult, two_stage_consensus
from .engine import AgentProfile, EngineConfig, GraphSpec, SimulationTrace, run_consensus
from .errors import ConfigError, ParameterError
from .harness.rng import agent_stream
from .spaces.sdr_curves import (
    CALIBRATED_MU,
    CALIBRATED_SIGMA_X,
    CALIBRATED_SIGMA_Y,
    PHI_MAX,
    SDRCurveParams,
    SDRCurveSpace,
    sdr_curve_eval,
)
from .spaces.wasserstein import (
    GEVParams,
    QuantileFunction,
    Wasserstein1D,
    fit_gev,
    gev_quantile,
)

PERCENTILE_LEVELS = (1, 5, 10, 50, 90, 95, 99)
VALUATION_CHUNK = 65_536


# --- consumption model -----------------------------------------------------


@dataclass(frozen=True)
class ConsumptionModelParams:
    mu: float = CALIBRATED_MU
    phi: float = 0.979
    sigma_x: float = CALIBRATED_SIGMA_X
    sigma_y: float = CALIBRATED_SIGMA_Y
    y_minus1: float = 0.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ParameterError("shock volatilities must be positive")
        if not 0.0 <= self.phi <= PHI_MAX:
            raise ParameterError(f"phi must lie in [0, 1 - 1e-6], got {self.phi!r}")


@dataclass
class ConsumptionPaths:
    """Simulated paths, one row per path.

    ``log_c[:, t]`` is ``ln C(t)`` for ``t = 0..T``; ``x[:, s]`` and
    ``y[:, s]`` are the growth and factor at ``s = 0..T-1``; ``y_prev`` is
    the factor one period earlier (so ``y_prev[:, 0] = y_{-1}``).
    """

    log_c: np.ndarray
    x: np.ndarray
    y: np.ndarray
    y_prev: np.ndarray
    eps_x: np.ndarray
    eps_y: np.ndarray

    @property
    def consumption(self) -> np.ndarray:
        return np.exp(self.log_c)

    def log_growth(self, t: int) -> np.ndarray:
        """``ln C(t) - ln C(0)`` for every path."""
        return self.log_c[:, t] - self.log_c[:, 0]


def simulate_consumption(params: ConsumptionModelParams, horizon: int, seed: int = 0,
                         n_paths: int = 1, c0: float = 1.0) -> ConsumptionPaths:
    """Simulate the single-factor consumption model.

    ``C(s+1) = C(s) exp(x(s))``, ``x(s) = mu + y(s-1) + eps_x(s)`` and
    ``y(s) = phi y(s-1) + eps_y(s)``, started from ``y(-1) = y_minus1``.
    With this timing ``E[ln C(t) - ln C(0)] = mu t + y_{-1} (1 - phi^t) / (1 - phi)``.
    """
    if horizon < 1:
        raise ParameterError("horizon must be at least 1")
    if n_paths < 1:
        raise ParameterError("n_paths must be at least 1")
    rng = agent_stream(seed, "consumption")
    eps_x = params.sigma_x * rng.standard_normal((n_paths, horizon))
    eps_y = params.sigma_y * rng.standard_normal((n_paths, horizon))
    y = np.empty((n_paths, horizon))
    y_prev = np.empty((n_paths, horizon))
    prev = np.full(n_paths, float(params.y_minus1))
    for s in range(horizon):
        y_prev[:, s] = prev
        prev = params.phi * prev + eps_y[:, s]
        y[:, s] = prev
    x = params.mu + y_prev + eps_x
    log_c = np.empty((n_paths, horizon + 1))
    log_c[:, 0] = np.log(c0)
    log_c[:, 1:] = np.log(c0) + np.cumsum(x, axis=1)
    return ConsumptionPaths(log_c, x, y, y_prev, eps_x, eps_y)


# --- scenarios -------------------------------------------------------------

Bounds = tuple


def _check_bounds(path: str, b, violations: list, lo_limit=None, hi_limit=None) -> None:
    lo, hi = b
    if not (np.isfinite(lo) and np.isfinite(hi)):
        violations.append((path, "bounds must be finite"))
    elif lo > hi:
        violations.append((path, f"lower bound {lo} exceeds upper bound {hi}"))
    elif lo_limit is not None and lo < lo_limit:
        violations.append((path, f"lower bound {lo} is below {lo_limit}"))
    elif hi_limit is not None and hi > hi_limit:
        violations.append((path, f"upper bound {hi} is above {hi_limit}"))


@dataclass
class ProfileBounds:
    theta: Bounds = (0.3, 0.7)
    rho: Bounds = (0.5, 1.5)
    r: Bounds = (0.5, 1.5)
    epsilon: Bounds = (0.05, 0.1)

    def violations(self, prefix: str) -> list:
        out = []
        _check_bounds(f"{prefix}.theta", self.theta, out, 0.0, 1.0)
        _check_bounds(f"{prefix}.rho", self.rho, out)
        _check_bounds(f"{prefix}.r", self.r, out, 0.0)
        _check_bounds(f"{prefix}.epsilon", self.epsilon, out)
        if self.rho[0] <= 0:
            out.append((f"{prefix}.rho", "rho must be positive"))
        if self.epsilon[0] <= 0:
            out.append((f"{prefix}.epsilon", "epsilon must be positive"))
        return out

    def sample(self, rng: np.random.Generator) -> AgentProfile:
        theta, rho, r, eps = (rng.uniform(*b) for b in (self.theta, self.rho, self.r, self.epsilon))
        return AgentProfile(theta, rho, r, eps)


@dataclass
class GEVBounds:
    mu: Bounds
    sigma: Bounds
    xi: Bounds

    def violations(self, prefix: str) -> list:
        out = []
        _check_bounds(f"{prefix}.mu", self.mu, out)
        _check_bounds(f"{prefix}.sigma", self.sigma, out)
        _check_bounds(f"{prefix}.xi", self.xi, out)
        if self.sigma[0] <= 0:
            out.append((f"{prefix}.sigma", "GEV scale must be positive"))
        return out

    def sample(self, rng: np.random.Generator) -> GEVParams:
        return GEVParams(*(rng.uniform(*b) for b in (self.mu, self.sigma, self.xi)))


@dataclass
class Subgroup:
    size: int = 30
    gamma: Bounds = (0.8, 1.5)
    delta: Bounds = (0.029, 0.031)
    phi: Bounds = (0.977, 0.981)
    y_minus1: Bounds = (-0.001, 0.001)
    profile: ProfileBounds = field(default_factory=ProfileBounds)
    gev: GEVBounds | None = None

    def violations(self, prefix: str) -> list:
        out = []
        if self.size < 1:
            out.append((f"{prefix}.size", "subgroup size must be at least 1"))
        _check_bounds(f"{prefix}.gamma", self.gamma, out, 0.0)
        _check_bounds(f"{prefix}.delta", self.delta, out)
        _check_bounds(f"{prefix}.phi", self.phi, out, 0.0, PHI_MAX)
        _check_bounds(f"{prefix}.y_minus1", self.y_minus1, out)
        out += self.profile.violations(f"{prefix}.profile")
        if self.gev is not None:
            out += self.gev.violations(f"{prefix}.gev")
        return out


# GEV bounds per subgroup; the experiment leaves them unspecified
DEFAULT_GEV_BOUNDS = (
    GEVBounds(mu=(9.0, 11.0), sigma=(1.5, 2.5), xi=(0.05, 0.15)),
    GEVBounds(mu=(10.0, 12.0), sigma=(2.0, 3.0), xi=(0.10, 0.20)),
    GEVBounds(mu=(8.0, 10.0), sigma=(1.0, 2.0), xi=(0.00, 0.10)),
)
DEFAULT_GAMMA_BOUNDS = ((0.8, 1.5), (0.4, 1.7), (0.3, 2.0))

# consensus-preference bounds of the two preset scenarios
UNIFORM_BELIEFS_PROFILE = ProfileBounds()
IMPATIENT_PROFILES = (
    ProfileBounds(theta=(0.5, 0.8), rho=(0.2, 0.6), r=(0.1, 0.5)),
    ProfileBounds(theta=(0.3, 0.6), rho=(0.6, 1.2), r=(0.5, 1.5)),
    ProfileBounds(theta=(0.1, 0.4), rho=(1.5, 3.0), r=(1.5, 3.0)),
)


@dataclass
class SDRScenario:
    subgroups: list = field(default_factory=list)
    seed: int = 0
    scheme: str = "one"
    label: str = "uniform_beliefs"
    metric: str = "param"
    horizon: int = 100
    variance_term: str = "sigma_y"
    scale: tuple | None = None
    engine: EngineConfig = field(default_factory=EngineConfig)
    graph: GraphSpec = field(default_factory=GraphSpec)

    def __post_init__(self):
        if not self.subgroups:
            self.subgroups = [Subgroup(gamma=g, gev=b)
                              for g, b in zip(DEFAULT_GAMMA_BOUNDS, DEFAULT_GEV_BOUNDS)]
        self.validate()

    def validate(self) -> None:
        out = []
        for k, g in enumerate(self.subgroups):
            out += g.violations(f"subgroups[{k}]")
        if self.scheme not in ("one", "two"):
            out.append(("scheme", f"scheme must be 'one' or 'two', got {self.scheme!r}"))
        if self.metric not in ("param", "curve"):
            out.append(("metric", f"metric must be 'param' or 'curve', got {self.metric!r}"))
        if not 0 <= int(self.seed) < 2**64:
            out.append(("seed", "seed must be a 64-bit unsigned integer"))
        if out:
            raise ConfigError("invalid SDR scenario: " + "; ".join(f"{p}: {m}" for p, m in out), out)

    @property
    def n_agents(self) -> int:
        return sum(g.size for g in self.subgroups)

    @classmethod
    def uniform_beliefs(cls, seed: int = 0, **kw) -> "SDRScenario":
        groups = [Subgroup(gamma=g, gev=b, profile=UNIFORM_BELIEFS_PROFILE)
                  for g, b in zip(DEFAULT_GAMMA_BOUNDS, DEFAULT_GEV_BOUNDS)]
        return cls(groups, seed=seed, label="uniform_beliefs", **kw)

    @classmethod
    def impatient_agents(cls, seed: int = 0, **kw) -> "SDRScenario":
        groups = [Subgroup(gamma=g, gev=b, profile=p)
                  for g, b, p in zip(DEFAULT_GAMMA_BOUNDS, DEFAULT_GEV_BOUNDS, IMPATIENT_PROFILES)]
        return cls(groups, seed=seed, label="impatient_agents", **kw)

    def space(self) -> SDRCurveSpace:
        return SDRCurveSpace(self.metric, self.horizon, self.scale, self.variance_term)

    def engine_config(self) -> EngineConfig:
        e = self.engine
        return EngineConfig(e.p_stop, e.max_steps, e.acceptance_mode, e.time_update,
                            int(self.seed), e.record_positions)


@dataclass
class SampledAgents:
    anchors: list
    profiles: list
    labels: np.ndarray


def sample_agents(scenario: SDRScenario) -> SampledAgents:
    """Draw SDR-curve parameters and consensus profiles, subgroup by subgroup.

    Curve parameters and profiles use separate substreams, so changing
    profile bounds leaves the sampled curves unchanged.
    """
    curve_rng = agent_stream(scenario.seed, "sdr-curves")
    profile_rng = agent_stream(scenario.seed, "sdr-profiles")
    anchors, profiles, labels = [], [], []
    for k, g in enumerate(scenario.subgroups):
        for _ in range(g.size):
            gamma, delta, phi, y = (curve_rng.uniform(*b)
                                    for b in (g.gamma, g.delta, g.phi, g.y_minus1))
            anchors.append(SDRCurveParams(gamma, delta, phi, y))
            profiles.append(g.profile.sample(profile_rng))
            labels.append(k)
    return SampledAgents(anchors, profiles, np.array(labels))


def sample_gev_agents(scenario: SDRScenario) -> tuple:
    """GEV anchors per subgroup (own substream) and the subgroup labels."""
    rng = agent_stream(scenario.seed, "gev-anchors")
    params, labels = [], []
    for k, g in enumerate(scenario.subgroups):
        if g.gev is None:
            raise ConfigError(f"subgroup {k} has no GEV bounds",
                              [(f"subgroups[{k}].gev", "required for the GEV pipeline")])
        for _ in range(g.size):
            params.append(g.gev.sample(rng))
            labels.append(k)
    return params, np.array(labels)


# --- pipelines -------------------------------------------------------------


@dataclass
class PipelineResult:
    consensus: object
    converged: bool
    trace: SimulationTrace
    two_stage: TwoStageResult | None
    anchors: list
    profiles: list
    labels: np.ndarray
    fit: GEVParams | None = None

    @property
    def n_steps(self) -> int:
        if self.two_stage is not None:
            return self.two_stage.total_steps_worst
        return self.trace.n_steps


def _run(space, anchors, profiles, scenario: SDRScenario):
    cfg = scenario.engine_config()
    if scenario.scheme == "two":
        res = two_stage_consensus(space, anchors, profiles, len(scenario.subgroups),
                                  config=cfg, graph=scenario.graph)
        return res.consensus, not res.partial, res.global_trace, res
    trace = run_consensus(space, anchors, profiles, graph=scenario.graph, config=cfg)
    return trace.consensus, trace.converged, trace, None


def run_sdr_consensus(scenario: SDRScenario) -> PipelineResult:
    """Consensus SDR curve for the sampled agents.

    When no consensus is reached, ``consensus`` holds the last proposal and
    ``converged`` is false.
    """
    agents = sample_agents(scenario)
    consensus, ok, trace, two = _run(scenario.space(), agents.anchors, agents.profiles, scenario)
    if consensus is None and trace.steps:
        consensus = trace.steps[-1].proposal
    return PipelineResult(consensus, ok, trace, two, agents.anchors, agents.profiles, agents.labels)


def run_gev_consensus(scenario: SDRScenario, grid=None) -> PipelineResult:
    """Consensus contingency model in the 1-D Wasserstein space of GEV laws.

    Runs independently of the curve consensus but reuses the sampled
    profiles. The result carries the consensus quantile function and its
    least-squares GEV fit.
    """
    space = Wasserstein1D(grid)
    params, labels = sample_gev_agents(scenario)
    anchors = [QuantileFunction.from_gev(p, space.grid) for p in params]
    profiles = sample_agents(scenario).profiles
    consensus, ok, trace, two = _run(space, anchors, profiles, scenario)
    if consensus is None and trace.steps:
        consensus = trace.steps[-1].proposal
    fit = fit_gev(consensus) if consensus is not None else None
    return PipelineResult(consensus, ok, trace, two, params, profiles, labels, fit)


# --- valuation -------------------------------------------------------------


@dataclass
class ValuationReport:
    mean: float
    std: float
    stderr: float
    percentiles: dict
    n_samples: int
    discount_factor: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "stderr": self.stderr,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
            "n_samples": self.n_samples,
            "discount_factor": self.discount_factor,
        }


def _inverse_transform(dist, u):
    if isinstance(dist, GEVParams):
        return gev_quantile(dist, u)
    if isinstance(dist, QuantileFunction):
        return dist(u)
    raise ParameterError(f"cannot sample from {type(dist).__name__}")


def value_contingency(curve: SDRCurveParams, dist, t: float, n_samples: int = 100_000,
                      seed: int = 0, variance_term: str = "sigma_y") -> ValuationReport:
    """Monte-Carlo value of ``X(t)`` discounted at the curve's rate, ``exp(-r(t) t) X``.

    Samples come from fixed-size chunks, each drawn from its own substream,
    so the report depends only on ``seed`` and ``n_samples``.
    """
    if t < 1:
        raise ParameterError("valuation horizon must be at least 1")
    if n_samples < 1:
        raise ParameterError("n_samples must be at least 1")
    factor = float(np.exp(-sdr_curve_eval(curve, t, variance_term) * t))
    chunks = []
    for k, start in enumerate(range(0, n_samples, VALUATION_CHUNK)):
        m = min(VALUATION_CHUNK, n_samples - start)
        # half-ulp shift keeps u inside the open interval (0, 1)
        u = agent_stream(seed, f"valuation-{k}").random(m) + 2.0**-54
        chunks.append(_inverse_transform(dist, u))
    values = factor * np.concatenate(chunks)
    std = float(values.std(ddof=1)) if n_samples > 1 else 0.0
    pct = np.percentile(values, PERCENTILE_LEVELS)
    return ValuationReport(
        mean=float(values.mean()),
        std=std,
        stderr=float(std / np.sqrt(n_samples)),
        percentiles={lvl: float(v) for lvl, v in zip(PERCENTILE_LEVELS, pct)},
        n_samples=int(n_samples),
        discount_factor=factor,
    )
