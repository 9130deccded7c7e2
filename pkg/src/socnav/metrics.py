"""Episode and aggregate navigation metrics.

Per episode: success flag, path length (NP), completion time (NT), and two
social-quality counters, UF (ticks inside the universal minimum-distance
zone of any human) and HA (ticks inside any human's activity-preference
zone). Counters count violating ticks, not violating pairs. Aggregates
average NP/NT over successful episodes only and UF/HA over all episodes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .constraints import ComplianceParams
from .errors import InputError
from .simulator import EpisodeResult, EpisodeStatus

CSV_HEADER = "method,n_humans,SR,NP,NT,UF,HA,episodes"


@dataclass(frozen=True)
class EpisodeMetrics:
    seed: int
    status: str
    success: bool
    np: float
    nt: float
    uf: int
    ha: int
    ticks: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate over a batch; np/nt are None when no episode succeeded."""

    sr: float
    np: float | None
    nt: float | None
    uf: float
    ha: float
    n_episodes: int


def _tick_violations(
    robot_p, robot_radius, humans, params: ComplianceParams
) -> tuple[bool, bool]:
    """(uncomfortable, activity_violating) for one tick."""
    uncomfortable = False
    activity_violating = False
    for hid, hp, hradius, activity in humans:
        dist = float(np.linalg.norm(np.asarray(robot_p) - np.asarray(hp)))
        if dist < params.d_min + robot_radius + hradius:
            uncomfortable = True
        if dist < params.pref(activity) + robot_radius + hradius:
            activity_violating = True
    return uncomfortable, activity_violating


def episode_metrics(result: EpisodeResult, params: ComplianceParams) -> EpisodeMetrics:
    """Compute the per-episode record from the recorded trajectory."""
    frames = result.trajectory
    positions = np.array([f.robot.position for f in frames])
    np_length = float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))
    nt = result.terminal_tick * params.dt

    uf = ha = 0
    for f in frames:
        humans = [(h.id, h.position, h.radius, h.activity) for h in f.humans]
        unc, act = _tick_violations(f.robot.position, f.robot.radius, humans, params)
        uf += unc
        ha += act

    return EpisodeMetrics(
        seed=result.cfg.seed,
        status=result.status.value,
        success=result.status is EpisodeStatus.SUCCESS,
        np=np_length,
        nt=nt,
        uf=uf,
        ha=ha,
        ticks=result.terminal_tick,
    )


def metrics_from_trace(
    records: list[dict], params: ComplianceParams, robot_radius: float = 0.3,
    human_radius: float = 0.3,
) -> dict:
    """Recompute NP/NT/UF/HA from trace records alone.

    Radii are not stored in traces, so the caller supplies them (defaults
    match the stock scenario).
    """
    positions = np.array([r["robot"]["p"] for r in records])
    np_length = float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))
    nt = (len(records) - 1) * params.dt
    uf = ha = 0
    for r in records:
        humans = [(h["id"], h["p"], human_radius, h["activity"]) for h in r["humans"]]
        unc, act = _tick_violations(r["robot"]["p"], robot_radius, humans, params)
        uf += unc
        ha += act
    return {"np": np_length, "nt": nt, "uf": uf, "ha": ha, "ticks": len(records) - 1}


def aggregate(records: list[EpisodeMetrics]) -> MetricsReport:
    """Batch aggregate; NP/NT are averaged over successful episodes only."""
    if not records:
        raise InputError("no episode records to aggregate")
    n = len(records)
    successes = [r for r in records if r.success]
    sr = len(successes) / n
    np_mean = float(np.mean([r.np for r in successes])) if successes else None
    nt_mean = float(np.mean([r.nt for r in successes])) if successes else None
    uf_mean = float(np.mean([r.uf for r in records]))
    ha_mean = float(np.mean([r.ha for r in records]))
    return MetricsReport(
        sr=sr, np=np_mean, nt=nt_mean, uf=uf_mean, ha=ha_mean, n_episodes=n
    )


def _fmt_cell(value: float | None) -> str:
    # Undefined aggregates print as empty cells.
    return "" if value is None else f"{value:.2f}"


def results_csv_rows(rows: list[tuple[str, int, MetricsReport]]) -> list[str]:
    """Render (method, n_humans, report) rows under the fixed header."""
    lines = [CSV_HEADER]
    for method, n_humans, report in rows:
        lines.append(
            ",".join(
                [
                    method,
                    str(n_humans),
                    f"{report.sr:.2f}",
                    _fmt_cell(report.np),
                    _fmt_cell(report.nt),
                    _fmt_cell(report.uf),
                    _fmt_cell(report.ha),
                    str(report.n_episodes),
                ]
            )
        )
    return lines


def write_episode_records(path, records: list[EpisodeMetrics]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")
