"""Run reports and their CSV serialization.

Files written by :func:`write_report`:

``timeseries.csv``
    ``t, H, H_pred`` then ``H_<id>, H_<id>_pred, Hm_<id>, tau_<id>`` per
    agent.  ``Hm``/``tau`` are ``nan`` on ticks without an FDI evaluation.
``detections.csv``
    ``agent_id, t_detect, metric, threshold, classification, latency``.
``summary.csv``
    ``fault_id, expected_signature, observed_behavior, detected, latency``.

Floats use 17 significant digits so files round-trip and compare byte for
byte across runs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

TIMESERIES = "timeseries.csv"
DETECTIONS = "detections.csv"
SUMMARY = "summary.csv"
DETECTION_HEADER = ["agent_id", "t_detect", "metric", "threshold", "classification", "latency"]
SUMMARY_HEADER = ["fault_id", "expected_signature", "observed_behavior", "detected", "latency"]

# Mean relative global-cost deviation below which the run counts as "visibly same".
SAME_COST_TOL = 0.05


class ReportError(OSError):
    pass


@dataclass
class SummaryRow:
    fault_id: str
    agent_id: str
    kind: str
    expected_signature: str
    observed_behavior: str
    detected: bool
    latency: Optional[float]
    classification: Optional[str] = None


@dataclass
class RunReport:
    name: str
    agent_ids: list
    times: np.ndarray
    H: np.ndarray
    H_pred: np.ndarray
    Hi: np.ndarray
    Hi_pred: np.ndarray
    Hm: np.ndarray
    tau: np.ndarray
    detections: list = field(default_factory=list)
    global_detection: tuple = (False, None)
    summary: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def column(self, agent_id: str) -> int:
        return self.agent_ids.index(agent_id)

    def detections_for(self, agent_id: str) -> list:
        return [d for d in self.detections if d.agent_id == agent_id]

    def detected_agents(self) -> set:
        return {d.agent_id for d in self.detections}

    def max_metric(self) -> float:
        m = self.Hm[np.isfinite(self.Hm)] if np.isfinite(self.Hm).any() else np.zeros(1)
        return float(np.max(np.abs(m))) if m.size else 0.0


def observed_behavior(times, H, H_pred, start: float) -> str:
    sel = np.asarray(times) >= start
    if not sel.any():
        return "not observed"
    rel = float(np.mean((H[sel] - H_pred[sel]) / H_pred[sel]))
    if rel < -SAME_COST_TOL:
        return "improved global cost"
    if rel > SAME_COST_TOL:
        return "deteriorating global cost"
    return "visibly same global cost"


def summarize(cfg, report: RunReport, first_after_fault: dict) -> list:
    rows = []
    for f in cfg.faults:
        d = first_after_fault.get(f.agent_id)
        rows.append(
            SummaryRow(
                fault_id=f.fault_id,
                agent_id=f.agent_id,
                kind=f.kind,
                expected_signature=f"Hm_{f.agent_id}(t) > 0",
                observed_behavior=observed_behavior(report.times, report.H, report.H_pred, f.start_time),
                detected=d is not None,
                latency=None if d is None else d.time - f.start_time,
                classification=None if d is None else d.classification,
            )
        )
    return rows


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def timeseries_header(agent_ids) -> list:
    cols = ["t", "H", "H_pred"]
    for a in agent_ids:
        cols += [f"H_{a}", f"H_{a}_pred", f"Hm_{a}", f"tau_{a}"]
    return cols


def _write(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
    except OSError as exc:
        raise ReportError(f"cannot write report file {path}: {exc}") from exc


def write_report(report: RunReport, directory) -> list:
    """Write the three CSV files into ``directory``; returns their paths."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create report directory {out}: {exc}") from exc

    def series_rows():
        for k, t in enumerate(report.times):
            row = [t, report.H[k], report.H_pred[k]]
            for i in range(len(report.agent_ids)):
                row += [report.Hi[k, i], report.Hi_pred[k, i], report.Hm[k, i], report.tau[k, i]]
            yield row

    paths = [out / TIMESERIES, out / DETECTIONS, out / SUMMARY]
    _write(paths[0], timeseries_header(report.agent_ids), series_rows())
    _write(
        paths[1],
        DETECTION_HEADER,
        ([d.agent_id, d.time, d.metric, d.threshold, d.classification, d.latency] for d in report.detections),
    )
    _write(
        paths[2],
        SUMMARY_HEADER,
        ([s.fault_id, s.expected_signature, s.observed_behavior, s.detected, s.latency] for s in report.summary),
    )
    return paths
