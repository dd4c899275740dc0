"""Readers and writers for the pipeline artifacts.

CSV numbers are rendered with 17 significant digits, which is enough for a
parse/re-serialize cycle to reproduce the file byte for byte. JSON floats
use Python's shortest round-trip representation, which preserves values
exactly as well.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .billiard import CollisionEvent, ParticleState, TrajectoryLog, Vec2, Wall
from .sweep import SlopeObservation, SweepFailure, SweepResult, SweepSpec


def fmt(x: float) -> str:
    """17-significant-digit decimal rendering."""
    return f"{x:.17g}"


# -- trajectory ------------------------------------------------------------

TRAJECTORY_HEADER = "k,x,y,t,wall"


def trajectory_csv_text(log: TrajectoryLog) -> str:
    lines = [TRAJECTORY_HEADER]
    init = log.initial
    lines.append(f"0,{fmt(init.position.x)},{fmt(init.position.y)},{fmt(init.elapsed_time)},")
    for e in log.events:
        lines.append(f"{e.index},{fmt(e.point.x)},{fmt(e.point.y)},{fmt(e.time)},{e.wall.value}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(log: TrajectoryLog, path: Path | str) -> None:
    Path(path).write_text(trajectory_csv_text(log))


def read_trajectory_csv(path: Path | str) -> list[dict]:
    """Rows as dicts with keys k, x, y, t, wall (wall is '' for the k=0 row)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_HEADER.split(","):
            raise ValueError(f"unexpected trajectory header {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append({
                "k": int(rec["k"]),
                "x": float(rec["x"]),
                "y": float(rec["y"]),
                "t": float(rec["t"]),
                "wall": rec["wall"],
            })
    return rows


def rows_to_trajectory_csv_text(rows: Iterable[dict]) -> str:
    """Re-serialize parsed trajectory rows (round-trip check helper)."""
    lines = [TRAJECTORY_HEADER]
    for r in rows:
        lines.append(f"{r['k']},{fmt(r['x'])},{fmt(r['y'])},{fmt(r['t'])},{r['wall']}")
    return "\n".join(lines) + "\n"


def _state_to_json(state: ParticleState) -> dict:
    return {
        "position": [state.position.x, state.position.y],
        "velocity": [state.velocity.x, state.velocity.y],
        "elapsed_time": state.elapsed_time,
    }


def _state_from_json(doc: dict) -> ParticleState:
    return ParticleState(
        position=Vec2(*doc["position"]),
        velocity=Vec2(*doc["velocity"]),
        elapsed_time=doc["elapsed_time"],
    )


def trajectory_json_doc(log: TrajectoryLog) -> dict:
    return {
        "initial": _state_to_json(log.initial),
        "events": [
            {
                "point": [e.point.x, e.point.y],
                "time": e.time,
                "wall": e.wall.value,
                "obstacle_center": list(e.obstacle_center),
                "index": e.index,
            }
            for e in log.events
        ],
        "post_collision_states": [_state_to_json(s) for s in log.post_collision_states],
        "truncated": log.truncated,
        "truncation_reason": log.truncation_reason,
    }


def write_trajectory_json(log: TrajectoryLog, path: Path | str) -> None:
    write_json(trajectory_json_doc(log), path)


def read_trajectory_json(path: Path | str) -> TrajectoryLog:
    doc = json.loads(Path(path).read_text())
    return TrajectoryLog(
        initial=_state_from_json(doc["initial"]),
        events=[
            CollisionEvent(
                point=Vec2(*e["point"]),
                time=e["time"],
                wall=Wall(e["wall"]),
                obstacle_center=tuple(e["obstacle_center"]),
                index=e["index"],
            )
            for e in doc["events"]
        ],
        post_collision_states=[_state_from_json(s) for s in doc["post_collision_states"]],
        truncated=doc["truncated"],
        truncation_reason=doc["truncation_reason"],
    )


# -- sweep ------------------------------------------------------------------

SWEEP_HEADER = "t,slope,D,logD"


def sweep_csv_text(result: SweepResult) -> str:
    lines = [SWEEP_HEADER]
    for o in result.observations:
        lines.append(f"{o.t},{fmt(o.slope)},{fmt(o.min_distance)},{fmt(o.log_min_distance)}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(result: SweepResult, path: Path | str) -> None:
    Path(path).write_text(sweep_csv_text(result))


def read_sweep_csv(path: Path | str) -> list[SlopeObservation]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER.split(","):
            raise ValueError(f"unexpected sweep header {reader.fieldnames}")
        return [
            SlopeObservation(
                t=int(rec["t"]),
                slope=float(rec["slope"]),
                min_distance=float(rec["D"]),
                log_min_distance=float(rec["logD"]),
            )
            for rec in reader
        ]


def observations_csv_text(observations: Iterable[SlopeObservation]) -> str:
    lines = [SWEEP_HEADER]
    for o in observations:
        lines.append(f"{o.t},{fmt(o.slope)},{fmt(o.min_distance)},{fmt(o.log_min_distance)}")
    return "\n".join(lines) + "\n"


def sweep_meta_doc(result: SweepResult, elapsed_seconds: float) -> dict:
    spec = result.spec
    return {
        "spec": {
            "slope_start": spec.slope_start,
            "slope_step": spec.slope_step,
            "count": spec.count,
            "k_min": spec.k_min,
            "k_max": spec.k_max,
        },
        "log_base": "e",
        "completed": len(result.observations),
        "failures": [
            {"t": f.t, "slope": f.slope, "reason": f.reason} for f in result.failures
        ],
        "elapsed_seconds": elapsed_seconds,
    }


def read_sweep_result(csv_path: Path | str, meta_path: Path | str) -> SweepResult:
    meta = json.loads(Path(meta_path).read_text())
    spec = SweepSpec(**meta["spec"])
    observations = read_sweep_csv(csv_path)
    failures = [SweepFailure(**f) for f in meta["failures"]]
    return SweepResult(spec=spec, observations=observations, failures=failures)


# -- model, residuals, histogram ---------------------------------------------

def model_json_doc(report, *, residual_variant: str, gamma_diag_init: float,
                   max_iters: int, tol: float, update_delta: bool) -> dict:
    p = report.params
    return {
        "m": p.m,
        "delta": p.delta.tolist(),
        "gamma": p.gamma.tolist(),
        "mu": p.mu.tolist(),
        "sigma": p.sigma.tolist(),
        "loglik_trace": list(report.loglik_trace),
        "state_order": list(report.state_order),
        "metadata": {
            "init_scheme": "quantile-seeded k-means groups",
            "gamma_diag_init": gamma_diag_init,
            "max_iters": max_iters,
            "tol": tol,
            "iterations": report.iterations,
            "residual_variant": residual_variant,
            "update_delta": update_delta,
            "warnings": list(report.warnings),
        },
    }


RESIDUALS_HEADER = "t,x,u"


def residuals_csv_text(ts: Iterable[int], xs: Iterable[float], us: Iterable[float]) -> str:
    lines = [RESIDUALS_HEADER]
    for t, x, u in zip(ts, xs, us):
        lines.append(f"{t},{fmt(x)},{fmt(u)}")
    return "\n".join(lines) + "\n"


def read_residuals_csv(path: Path | str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESIDUALS_HEADER.split(","):
            raise ValueError(f"unexpected residuals header {reader.fieldnames}")
        return [
            {"t": int(r["t"]), "x": float(r["x"]), "u": float(r["u"])} for r in reader
        ]


def histogram_json_doc(counts: np.ndarray) -> dict:
    counts = np.asarray(counts)
    return {
        "bins": int(counts.size),
        "counts": [int(c) for c in counts],
        "total": int(counts.sum()),
    }


# -- generic JSON helpers -----------------------------------------------------

def write_json(doc: dict, path: Path | str) -> None:
    Path(path).write_text(json_text(doc))


def json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def json_roundtrips(path: Path | str) -> bool:
    """True when parsing and re-serializing the file reproduces its bytes."""
    raw = Path(path).read_text()
    return json_text(json.loads(raw)) == raw
