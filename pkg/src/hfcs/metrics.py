"""Run reports, cross-iteration aggregation and CSV export.

Per-run directory layout (all files comma separated, header row first,
``.`` decimal point, floats written with ``repr`` so they round-trip):

``nodes.csv``      id,layer,lon,lat,messages
``summary.csv``    metric,value            (one row per metric in SUMMARY_METRICS)
``failures.csv``   time,victim,layer,pool_live_size,detected_at
``intervals.csv``  index,live,messages,pending

Aggregate file ``aggregate.csv``: metric,mean,sd,n
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

SUMMARY_METRICS = (
    "variant",
    "seed",
    "duration",
    "registrations",
    "pools",
    "mean_pool_size",
    "mean_messages_per_node",
    "metadata_messages",
    "gossip_sessions_completed",
    "gossip_syn_unanswered",
    "gossip_sessions_aborted",
    "tasks_issued",
    "tasks_completed",
    "tasks_redirected",
    "tasks_escalated",
    "tasks_lost",
    "tasks_rejected",
    "tasks_in_flight",
    "redirect_denials",
    "geofence_escalations",
    "failures_triggered",
    "failures_detected",
    "detection_rate",
    "undetected_rate",
    "lost_pools",
)
_TEXT_METRICS = {"variant"}
_INT_METRICS = set(SUMMARY_METRICS) - _TEXT_METRICS - {
    "duration", "mean_pool_size", "mean_messages_per_node", "detection_rate", "undetected_rate",
}


class ExportError(OSError):
    pass


@dataclass
class NodeRow:
    id: int
    layer: str
    lon: float
    lat: float
    messages: int


@dataclass
class FailureRecord:
    time: float
    victim: int
    layer: str
    pool_live_size: int
    detected_at: float | None = None


@dataclass
class IntervalRow:
    index: int
    live: int
    messages: int
    pending: bool


@dataclass
class MetricsReport:
    summary: dict = field(default_factory=dict)
    nodes: list[NodeRow] = field(default_factory=list)
    failures: list[FailureRecord] = field(default_factory=list)
    intervals: list[IntervalRow] = field(default_factory=list)

    def __getitem__(self, name):
        return self.summary[name]

    @property
    def detection_rate(self) -> float:
        return self.summary["detection_rate"]


def finalize_summary(summary: dict) -> dict:
    trig = summary.get("failures_triggered", 0)
    det = summary.get("failures_detected", 0)
    summary["detection_rate"] = det / trig if trig else 0.0
    summary["undetected_rate"] = 1.0 - summary["detection_rate"] if trig else 0.0
    out = {}
    for name in SUMMARY_METRICS:
        v = summary.get(name, 0)
        if name in _INT_METRICS:
            v = int(v)
        elif name not in _TEXT_METRICS:
            v = float(v)
        out[name] = v
    return out


# ---- aggregation -----------------------------------------------------


@dataclass
class Stat:
    mean: float
    sd: float
    n: int


def aggregate(reports: Sequence[MetricsReport]) -> dict[str, Stat]:
    """Sample mean and sample standard deviation of every numeric metric."""
    if not reports:
        raise ValueError("aggregate() needs at least one report")
    out = {}
    for name in SUMMARY_METRICS:
        if name in _TEXT_METRICS or name == "seed":
            continue
        values = [float(r.summary[name]) for r in reports]
        sd = statistics.stdev(values) if len(values) > 1 else 0.0
        out[name] = Stat(statistics.fmean(values), sd, len(values))
    return out


# ---- CSV -------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc


def export_report(report: MetricsReport, directory: str | Path) -> list[Path]:
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create {d}: {exc.strerror or exc}") from exc
    paths = [d / "nodes.csv", d / "summary.csv", d / "failures.csv", d / "intervals.csv"]
    _write_rows(paths[0], ("id", "layer", "lon", "lat", "messages"),
                ((n.id, n.layer, float(n.lon), float(n.lat), n.messages) for n in report.nodes))
    _write_rows(paths[1], ("metric", "value"), ((k, report.summary[k]) for k in SUMMARY_METRICS))
    _write_rows(paths[2], ("time", "victim", "layer", "pool_live_size", "detected_at"),
                ((f.time, f.victim, f.layer, f.pool_live_size, f.detected_at) for f in report.failures))
    _write_rows(paths[3], ("index", "live", "messages", "pending"),
                ((i.index, i.live, i.messages, i.pending) for i in report.intervals))
    return paths


def _read(path: Path) -> list[dict]:
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc.strerror or exc}") from exc


def read_report(directory: str | Path) -> MetricsReport:
    d = Path(directory)
    summary = {}
    for row in _read(d / "summary.csv"):
        k, v = row["metric"], row["value"]
        summary[k] = v if k in _TEXT_METRICS else (int(v) if k in _INT_METRICS else float(v))
    nodes = [NodeRow(int(r["id"]), r["layer"], float(r["lon"]), float(r["lat"]), int(r["messages"]))
             for r in _read(d / "nodes.csv")]
    failures = [
        FailureRecord(float(r["time"]), int(r["victim"]), r["layer"], int(r["pool_live_size"]),
                      float(r["detected_at"]) if r["detected_at"] else None)
        for r in _read(d / "failures.csv")
    ]
    intervals = [IntervalRow(int(r["index"]), int(r["live"]), int(r["messages"]), r["pending"] == "1")
                 for r in _read(d / "intervals.csv")]
    return MetricsReport(summary, nodes, failures, intervals)


def export_aggregate(stats: dict[str, Stat], path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    _write_rows(p, ("metric", "mean", "sd", "n"), ((k, s.mean, s.sd, s.n) for k, s in stats.items()))
    return p


def read_aggregate(path: str | Path) -> dict[str, Stat]:
    return {r["metric"]: Stat(float(r["mean"]), float(r["sd"]), int(r["n"])) for r in _read(Path(path))}


def mean_messages(nodes: Sequence[NodeRow]) -> float:
    return statistics.fmean(n.messages for n in nodes) if nodes else 0.0

