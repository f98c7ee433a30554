"""Scenario configuration files.

A scenario is a JSON document validated by pydantic models. Every schema
violation is collected and reported with its field path; the JSON schema
generated from the models ships as ``configs/scenario.schema.json``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    model_validator,
)

from ..engine import AgentProfile, EngineConfig, GraphSpec
from ..errors import ConfigError
from ..sdr import GEVBounds, ProfileBounds, SDRScenario, Subgroup
from ..spaces import (
    BuresWasserstein,
    Euclidean,
    GaussianMeasure,
    GEVParams,
    QuantileFunction,
    SDRCurveParams,
    SDRCurveSpace,
    Wasserstein1D,
)
from ..spaces.wasserstein import default_grid
from .rng import MAX_SEED, agent_stream

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SCHEMA_PATH = CONFIG_DIR / "scenario.schema.json"


def _check_interval(v: list) -> list:
    lo, hi = v
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("bounds must be finite")
    if lo > hi:
        raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
    return v


def _within(lo_limit: float | None = None, hi_limit: float | None = None, strict_lo=False):
    def check(v: list) -> list:
        if lo_limit is not None and (v[0] <= lo_limit if strict_lo else v[0] < lo_limit):
            raise ValueError(f"bounds must lie {'above' if strict_lo else 'at or above'} {lo_limit}")
        if hi_limit is not None and v[1] > hi_limit:
            raise ValueError(f"upper bound {v[1]} exceeds {hi_limit}")
        return v
    return check


Interval = Annotated[list[float], Field(min_length=2, max_length=2), AfterValidator(_check_interval)]
UnitInterval = Annotated[Interval, AfterValidator(_within(0.0, 1.0))]
PositiveInterval = Annotated[Interval, AfterValidator(_within(0.0, strict_lo=True))]
NonnegInterval = Annotated[Interval, AfterValidator(_within(0.0))]
PhiInterval = Annotated[Interval, AfterValidator(_within(0.0, 1.0 - 1e-6))]
FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpaceSpec(_Model):
    kind: Literal["euclidean", "wasserstein1d", "gaussian", "sdr"]
    dim: int | None = Field(default=None, ge=1)
    grid_size: int = Field(default=1000, ge=2)
    metric: Literal["param", "curve"] = "param"
    horizon: int = Field(default=100, ge=2)
    variance_term: Literal["sigma_y", "sigma_x"] = "sigma_y"
    scale: list[FiniteFloat] | None = Field(default=None, min_length=4, max_length=4)


class ProfileSpec(_Model):
    theta: UnitInterval = [0.3, 0.7]
    rho: PositiveInterval = [0.5, 1.5]
    r: NonnegInterval = [0.5, 1.5]
    epsilon: PositiveInterval = [0.05, 0.1]


class GEVSpec(_Model):
    mu: Interval
    sigma: PositiveInterval
    xi: Interval


class AnchorSpec(_Model):
    """How a group's anchors are drawn.

    * ``euclidean``: ``points`` verbatim, or ``center`` plus normal ``spread``;
    * ``wasserstein1d``: ``family`` normal (``mean``, ``std``) or gev (``gev``);
    * ``gaussian``: mean ``center`` plus ``spread``, diagonal covariances
      with entries drawn from ``variance``;
    * ``sdr``: curve parameter bounds ``gamma``, ``delta``, ``phi``, ``y_minus1``.
    """

    points: list[list[FiniteFloat]] | None = None
    center: list[FiniteFloat] | None = None
    spread: list[FiniteFloat] | FiniteFloat = 0.0
    family: Literal["normal", "gev"] | None = None
    mean: Interval | None = None
    std: PositiveInterval | None = None
    variance: PositiveInterval | None = None
    gev: GEVSpec | None = None
    gamma: NonnegInterval | None = None
    delta: Interval | None = None
    phi: PhiInterval | None = None
    y_minus1: Interval | None = None


class GroupSpec(_Model):
    name: str = ""
    size: int = Field(ge=1)
    anchors: AnchorSpec
    profile: ProfileSpec = ProfileSpec()
    gev: GEVSpec | None = None


class GraphConfig(_Model):
    topology: Literal["complete", "knn", "erdos_renyi"] = "complete"
    k: int = Field(default=5, ge=1)
    p: float = Field(default=0.5, gt=0.0, le=1.0)


class EngineOptions(_Model):
    p_stop: float = Field(default=0.95, gt=0.0, le=1.0)
    max_steps: int = Field(default=500, ge=1)
    acceptance_mode: Literal["threshold", "bernoulli"] = "threshold"
    time_update: bool = False
    record_positions: bool = True


class SchemeSpec(_Model):
    kind: Literal["one", "two"] = "one"
    k: int | None = Field(default=None, ge=1)


class OutputSpec(_Model):
    dir: str = "out"
    trace: str = "trace.csv"
    summary: str = "summary.json"
    positions: str | None = None


class ValuationSpec(_Model):
    t: int = Field(default=50, ge=1)
    n_samples: int = Field(default=100_000, ge=1)


class ScenarioConfig(_Model):
    space: SpaceSpec
    groups: list[GroupSpec] = Field(min_length=1)
    graph: GraphConfig = GraphConfig()
    engine: EngineOptions = EngineOptions()
    scheme: SchemeSpec = SchemeSpec()
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    output: OutputSpec = OutputSpec()
    valuation: ValuationSpec | None = None

    @model_validator(mode="after")
    def _anchors_match_space(self):
        problems = []
        for k, g in enumerate(self.groups):
            problems += [(f"groups.{k}.anchors.{f}", m)
                         for f, m in _anchor_problems(self.space, g.anchors)]
        if self.scheme.k is not None and self.scheme.k > self.n_agents:
            problems.append(("scheme.k", f"K={self.scheme.k} exceeds the {self.n_agents} agents"))
        if problems:
            raise ValueError("; ".join(f"{p}: {m}" for p, m in problems))
        return self

    @property
    def n_agents(self) -> int:
        return sum(g.size for g in self.groups)


def _anchor_problems(space: SpaceSpec, a: AnchorSpec) -> list:
    out = []
    if space.kind == "euclidean":
        if a.points is None and a.center is None:
            out.append(("center", "euclidean groups need 'points' or 'center'"))
        vecs = (a.points or []) + ([a.center] if a.center is not None else [])
        dims = {len(v) for v in vecs}
        if space.dim is not None:
            dims.add(space.dim)
        if len(dims) > 1:
            out.append(("center", f"inconsistent dimensions {sorted(dims)}"))
        if isinstance(a.spread, list) and a.center is not None and len(a.spread) != len(a.center):
            out.append(("spread", "spread and center lengths differ"))
    elif space.kind == "wasserstein1d":
        if a.family == "normal" and (a.mean is None or a.std is None):
            out.append(("family", "normal anchors need 'mean' and 'std' bounds"))
        elif a.family == "gev" and a.gev is None:
            out.append(("gev", "gev anchors need 'gev' bounds"))
        elif a.family is None:
            out.append(("family", "wasserstein1d groups need a 'family'"))
    elif space.kind == "gaussian":
        if a.center is None or a.variance is None:
            out.append(("center", "gaussian groups need 'center' and 'variance'"))
    elif space.kind == "sdr":
        for f in ("gamma", "delta", "phi", "y_minus1"):
            if getattr(a, f) is None:
                out.append((f, "sdr groups need bounds for gamma, delta, phi and y_minus1"))
                break
    return out


def _violations(err: ValidationError) -> list:
    out = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"])
        msg = e["msg"]
        if e["type"] == "value_error" and not path:
            # cross-field check: already carries its own paths
            for part in msg.removeprefix("Value error, ").split("; "):
                p, _, m = part.partition(": ")
                out.append((p, m))
            continue
        out.append((path or "<root>", msg))
    return out


def parse_config_data(data) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as err:
        violations = _violations(err)
        lines = "\n".join(f"  {p}: {m}" for p, m in violations)
        raise ConfigError(f"{len(violations)} configuration error(s):\n{lines}", violations) from None


def parse_config(path) -> ScenarioConfig:
    """Load and validate a scenario file; raises :class:`ConfigError` on any problem."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}", [(str(path), "unreadable")]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          [(str(path), exc.msg)]) from None
    return parse_config_data(data)


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def json_schema() -> dict:
    return ScenarioConfig.model_json_schema()


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``ordered_preferences.json``."""
    path = CONFIG_DIR / name
    if not path.exists():
        raise ConfigError(f"no bundled config named {name!r}", [(name, "not found")])
    return path


# --- building runtime objects ----------------------------------------------


def build_space(cfg: ScenarioConfig):
    s = cfg.space
    if s.kind == "euclidean":
        return Euclidean(s.dim)
    if s.kind == "wasserstein1d":
        return Wasserstein1D(default_grid(s.grid_size))
    if s.kind == "gaussian":
        return BuresWasserstein(s.dim)
    return SDRCurveSpace(s.metric, s.horizon, s.scale, s.variance_term)


def _u(rng: np.random.Generator, b) -> float:
    return float(rng.uniform(b[0], b[1]))


def _draw_anchor(space: SpaceSpec, a: AnchorSpec, rng: np.random.Generator, index: int, grid):
    if space.kind == "euclidean":
        if a.points is not None:
            return np.array(a.points[index % len(a.points)], dtype=float)
        center = np.asarray(a.center, dtype=float)
        return center + np.asarray(a.spread, dtype=float) * rng.standard_normal(center.size)
    if space.kind == "wasserstein1d":
        if a.family == "normal":
            return QuantileFunction.normal(_u(rng, a.mean), _u(rng, a.std), grid)
        g = a.gev
        return QuantileFunction.from_gev(GEVParams(_u(rng, g.mu), _u(rng, g.sigma), _u(rng, g.xi)), grid)
    if space.kind == "gaussian":
        center = np.asarray(a.center, dtype=float)
        mean = center + np.asarray(a.spread, dtype=float) * rng.standard_normal(center.size)
        cov = np.diag([_u(rng, a.variance) for _ in range(center.size)])
        return GaussianMeasure(mean, cov)
    return SDRCurveParams(_u(rng, a.gamma), _u(rng, a.delta), _u(rng, a.phi), _u(rng, a.y_minus1))


def sample_population(cfg: ScenarioConfig):
    """Anchors, profiles and 0-based group labels for every agent.

    Anchors and profiles come from separate substreams of the scenario seed.
    """
    space = build_space(cfg)
    grid = getattr(space, "grid", None)
    anchor_rng = agent_stream(cfg.seed, "anchors")
    profile_rng = agent_stream(cfg.seed, "profiles")
    anchors, profiles, labels = [], [], []
    for k, g in enumerate(cfg.groups):
        p = g.profile
        for i in range(g.size):
            anchors.append(_draw_anchor(cfg.space, g.anchors, anchor_rng, i, grid))
            profiles.append(AgentProfile(_u(profile_rng, p.theta), _u(profile_rng, p.rho),
                                         _u(profile_rng, p.r), _u(profile_rng, p.epsilon)))
            labels.append(k)
    return space, anchors, profiles, np.array(labels)


def engine_config(cfg: ScenarioConfig) -> EngineConfig:
    e = cfg.engine
    return EngineConfig(e.p_stop, e.max_steps, e.acceptance_mode, e.time_update, cfg.seed,
                        e.record_positions)


def graph_spec(cfg: ScenarioConfig) -> GraphSpec:
    return GraphSpec(cfg.graph.topology, cfg.graph.k, cfg.graph.p)


def sdr_scenario(cfg: ScenarioConfig):
    """The SDR-pipeline scenario encoded by an ``sdr``-space config."""
    if cfg.space.kind != "sdr":
        raise ConfigError("the SDR pipelines need an 'sdr' space",
                          [("space.kind", "must be 'sdr' for the sdr and gev commands")])
    groups = []
    for g in cfg.groups:
        a, p = g.anchors, g.profile
        gev = None if g.gev is None else GEVBounds(tuple(g.gev.mu), tuple(g.gev.sigma), tuple(g.gev.xi))
        groups.append(Subgroup(
            size=g.size, gamma=tuple(a.gamma), delta=tuple(a.delta), phi=tuple(a.phi),
            y_minus1=tuple(a.y_minus1),
            profile=ProfileBounds(tuple(p.theta), tuple(p.rho), tuple(p.r), tuple(p.epsilon)),
            gev=gev,
        ))
    s = cfg.space
    return SDRScenario(
        groups, seed=cfg.seed, scheme=cfg.scheme.kind, label="config",
        metric=s.metric, horizon=s.horizon, variance_term=s.variance_term,
        scale=None if s.scale is None else tuple(s.scale),
        engine=engine_config(cfg), graph=graph_spec(cfg),
    )
