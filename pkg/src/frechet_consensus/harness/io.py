"""Trace and summary files.

Every float in CSV output is written with 17 significant digits so that
identical traces give byte-identical files. JSON output uses Python's
shortest round-trip float representation.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..engine import SimulationTrace
from ..errors import ConsensusError
from ..metric_core import MetricSpace

TRACE_COLUMNS = ("step", "agent_id", "dist_to_proposal", "q_accept", "group_P", "accepted")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def trace_rows(trace: SimulationTrace, agent_ids=None):
    """Per step: one row per agent, then a step row carrying ``P`` and the decision."""
    for rec in trace.steps:
        ids = range(len(rec.q)) if agent_ids is None else agent_ids
        for aid, d, q in zip(ids, rec.distances, rec.q):
            yield (str(rec.t), str(aid), fmt(d), fmt(q), "", "")
        yield (str(rec.t), "", "", "", fmt(rec.P), "1" if rec.accepted else "0")


def emit_trace(trace: SimulationTrace, path, agent_ids=None) -> Path:
    """Write the trace CSV; the row count is ``steps * agents + steps``."""
    path = Path(path)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace_rows(trace, agent_ids))
    return path


def read_trace(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def emit_positions(trace: SimulationTrace, space: MetricSpace, path) -> Path:
    """Plot-ready chart coordinates of every agent at every recorded step."""
    path = Path(path)
    rows = []
    for rec in trace.steps:
        if rec.positions is None:
            continue
        for i, p in enumerate(rec.positions):
            rows.append([str(rec.t), str(i)] + [fmt(c) for c in np.ravel(space.to_chart(p))])
    width = max((len(r) for r in rows), default=2) - 2
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "agent_id"] + [f"c{j}" for j in range(width)])
        w.writerows(rows)
    return path


def consensus_to_json(space: MetricSpace, point):
    return None if point is None else space.point_to_json(point)


def trace_summary(space: MetricSpace, trace: SimulationTrace) -> dict:
    last = trace.steps[-1] if trace.steps else None
    return {
        "converged": bool(trace.converged),
        "n_steps": trace.n_steps,
        "n_agents": trace.n_agents,
        "final_P": None if last is None else float(last.P),
        "mean_distance": [float(x) for x in trace.mean_distance()],
        "mean_acceptance": [float(x) for x in trace.mean_acceptance()],
        "consensus": consensus_to_json(space, trace.consensus),
        "last_proposal": None if last is None else space.point_to_json(last.proposal),
    }


def write_json(data, path) -> Path:
    path = Path(path)
    with _open_for_write(path) as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConsensusError(f"cannot read {path}: {exc}") from exc


def load_consensus(space: MetricSpace, path):
    """Consensus point stored in a summary JSON, rebuilt in ``space``."""
    data = read_json(path)
    if data.get("consensus") is None:
        return None
    return space.point_from_json(data["consensus"])
