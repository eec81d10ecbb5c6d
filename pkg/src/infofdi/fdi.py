"""Centralized monitor: fault metric, classification, adaptive threshold, detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import Pose, PoiField, SensorModel, inverse_variances, rotate_about, unit, perpendicular, visible_ids

NOMINAL = "nominal"
DEGRADED = "degraded"
IMPROVED = "improved"

# Sentinel metric when the predicted change vanishes but the actual one does not.
DEGENERATE = math.inf


@dataclass
class FdiConfig:
    window: Optional[float] = None  # seconds; None -> two orbital periods
    tick: float = 10.0
    epsilon_neighborhood_deg: float = 2.0
    threshold_samples: int = 10
    epsilon_nom: float = 0.0
    classification_epsilon: float = 1e-9
    threshold_floor: float = 0.05
    global_delta_threshold: float = 0.0
    global_absolute: bool = False
    degeneracy_floor: float = 1e-12

    def __post_init__(self):
        if self.window is not None and not self.window > 0.0:
            raise ValueError("fdi.window must be positive")
        if not self.tick > 0.0:
            raise ValueError("fdi.tick must be positive")
        if self.threshold_samples < 1:
            raise ValueError("fdi.threshold_samples must be >= 1")
        if self.epsilon_nom < 0.0:
            raise ValueError("fdi.epsilon_nom must be >= 0")
        if self.epsilon_neighborhood_deg < 0.0:
            raise ValueError("fdi.epsilon_neighborhood_deg must be >= 0")


@dataclass
class AgentWindowRecord:
    agent_id: str
    H_prev: float
    H_actual: float
    H_pred: float
    visible_pred: frozenset = frozenset()
    visible_actual: frozenset = frozenset()

    @property
    def delta_actual(self) -> float:
        return self.H_actual - self.H_prev

    @property
    def delta_pred(self) -> float:
        return self.H_pred - self.H_prev


@dataclass
class Detection:
    agent_id: str
    time: float
    metric: float
    threshold: float
    classification: str
    latency: Optional[float] = None
    window: int = 0


def _floor(record: AgentWindowRecord, rel: float) -> float:
    return rel * max(1.0, abs(record.H_prev))


def _degenerate(record: AgentWindowRecord, rel: float) -> bool:
    return abs(record.delta_pred) <= _floor(record, rel)


def ratio(record: AgentWindowRecord) -> float:
    """Realized over predicted contribution change."""
    return record.delta_actual / record.delta_pred


def fault_metric(record: AgentWindowRecord, degeneracy_floor: float = 1e-12) -> float:
    """``|1 - dH_actual / dH_pred|``; ``DEGENERATE`` if only the prediction is flat."""
    if record.H_actual == record.H_pred:
        return 0.0
    if _degenerate(record, degeneracy_floor):
        if abs(record.delta_actual) <= _floor(record, degeneracy_floor):
            return 0.0
        return DEGENERATE
    return abs(1.0 - ratio(record))


def classify(record: AgentWindowRecord, epsilon: float, degeneracy_floor: float = 1e-12) -> str:
    if record.H_actual == record.H_pred:
        return NOMINAL
    if _degenerate(record, degeneracy_floor):
        if abs(record.delta_actual) <= _floor(record, degeneracy_floor):
            return NOMINAL
        return DEGRADED
    if np.sign(record.delta_actual) != np.sign(record.delta_pred):
        return DEGRADED
    x = ratio(record)
    if x < 1.0 - epsilon:
        return DEGRADED
    if x > 1.0 + epsilon:
        return IMPROVED
    return NOMINAL


def sample_cone(axis, half_angle: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` unit vectors uniform on the spherical cap around ``axis``."""
    if count < 1:
        raise ValueError("sample budget must be >= 1")
    axis = unit(axis)
    u = rng.random((count, 2))
    cos_t = 1.0 - u[:, 0] * (1.0 - np.cos(half_angle))
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
    phi = 2.0 * np.pi * u[:, 1]
    e1 = perpendicular(axis)
    e2 = np.cross(axis, e1)
    return (
        cos_t[:, None] * axis
        + (sin_t * np.cos(phi))[:, None] * e1
        + (sin_t * np.sin(phi))[:, None] * e2
    )


@dataclass
class PerturbedSample:
    contribution: float
    visible: frozenset


def perturbed_contributions(
    pois: PoiField,
    inv: np.ndarray,
    agent_index: int,
    pose: Pose,
    sensor: SensorModel,
    target_center,
    directions: np.ndarray,
    candidates: Optional[np.ndarray] = None,
) -> list[PerturbedSample]:
    """Contribution of one agent if it pointed along each of ``directions``.

    The other agents' rows of ``inv`` are held fixed; the arithmetic matches
    :func:`info_cost.decompose` so an unchanged row reproduces the nominal
    contribution bit for bit.
    """
    base = pois.prior_information + pois.accumulated
    out = []
    for d in directions:
        row = inverse_variances(Pose(pose.position, unit(d)), pois.locations, sensor, target_center, candidates)
        trial = inv.copy()
        trial[agent_index] = row
        h = 1.0 / (base + trial.sum(axis=0))
        share = float(np.sum(pois.importance * h * h * row))
        out.append(PerturbedSample(share, visible_ids(row > 0.0)))
    return out


def threshold_from_samples(
    record: AgentWindowRecord,
    samples: Sequence[PerturbedSample],
    floor: float = 0.05,
    use_actual: bool = True,
    degeneracy_floor: float = 1e-12,
) -> float:
    """Smallest sampled metric deviation inside the admissible band, capped at ``floor``.

    A sample is admissible when its visible set differs from the predicted
    one and its contribution differs from the nominal prediction by more
    than zero but no more than the realized deviation.  The floor acts as
    one more admissible candidate, so it is returned when no sample
    qualifies and a larger sample budget can only lower the result.
    """
    if _degenerate(record, degeneracy_floor):
        return floor
    upper = abs(record.H_actual - record.H_pred) if use_actual else math.inf
    best = floor
    for s in samples:
        dev = abs(s.contribution - record.H_pred)
        if s.visible == record.visible_pred or not 0.0 < dev <= upper:
            continue
        best = min(best, abs(1.0 - (s.contribution - record.H_prev) / record.delta_pred))
    return best


def adaptive_threshold(
    record: AgentWindowRecord,
    pois: PoiField,
    inv: np.ndarray,
    agent_index: int,
    pose: Pose,
    sensor: SensorModel,
    target_center,
    aim,
    config: FdiConfig,
    rng: np.random.Generator,
    candidates: Optional[np.ndarray] = None,
    use_actual: bool = True,
) -> float:
    """Sample pointings in the epsilon cone around ``aim`` and threshold the metric.

    ``pois``/``inv``/``pose`` describe the fault-free twin at the evaluation
    time; ``aim`` is the twin's max-variance target direction.
    """
    if config.threshold_samples < 1:
        raise ValueError("threshold_samples must be >= 1")
    dirs = sample_cone(aim, np.deg2rad(config.epsilon_neighborhood_deg), config.threshold_samples, rng)
    samples = perturbed_contributions(pois, inv, agent_index, pose, sensor, target_center, dirs, candidates)
    return threshold_from_samples(record, samples, config.threshold_floor, use_actual, config.degeneracy_floor)


def detect(
    records: Sequence[AgentWindowRecord],
    thresholds: Sequence[float],
    config: FdiConfig,
    time: float = 0.0,
    fault_times: Optional[dict] = None,
    window: int = 0,
) -> list[Detection]:
    """One Detection for every agent whose metric strictly exceeds its threshold.

    With ``config.epsilon_nom > 0`` the realized deviation must also exceed
    the nominal perturbation bound, ``|H_actual - H_pred| > epsilon_nom``,
    i.e. the metric must beat ``epsilon_nom / |dH_pred|`` as well as ``tau``.
    """
    fault_times = fault_times or {}
    out = []
    for rec, tau in zip(records, thresholds):
        m = fault_metric(rec, config.degeneracy_floor)
        if m > tau and abs(rec.H_actual - rec.H_pred) > config.epsilon_nom:
            t_fault = fault_times.get(rec.agent_id)
            latency = None if t_fault is None or time < t_fault else time - t_fault
            out.append(
                Detection(
                    rec.agent_id,
                    time,
                    m,
                    tau,
                    classify(rec, config.classification_epsilon, config.degeneracy_floor),
                    latency,
                    window,
                )
            )
    return out


@dataclass
class DetectionLatch:
    """Keeps the first detection per (agent, window); later hits refresh the label."""

    detections: dict = field(default_factory=dict)

    def update(self, hits: Iterable[Detection]) -> None:
        for d in hits:
            key = (d.agent_id, d.window)
            if key in self.detections:
                self.detections[key].classification = d.classification
            else:
                self.detections[key] = d

    def all(self) -> list[Detection]:
        return sorted(self.detections.values(), key=lambda d: (d.time, d.agent_id))


def global_detect(times, H_series, H_nom_series, delta_threshold: float, absolute: bool = False):
    """First time the trapezoidal integral of ``H - H_nom`` exceeds ``delta * t``.

    Time is measured from the first sample; the start itself is skipped
    because both sides are zero there.  Returns ``(detected, t_first)``.
    """
    t = np.asarray(times, dtype=float)
    h = np.asarray(H_series, dtype=float)
    h_nom = np.asarray(H_nom_series, dtype=float)
    if t.shape != h.shape or t.shape != h_nom.shape:
        raise ValueError("H, H_nom and time grids must have the same shape")
    if len(t) < 2:
        return False, None
    diff = h - h_nom
    steps = 0.5 * (diff[1:] + diff[:-1]) * np.diff(t)
    integral = np.cumsum(steps)
    if absolute:
        integral = np.abs(integral)
    elapsed = t[1:] - t[0]
    hits = np.flatnonzero(integral > delta_threshold * elapsed)
    if len(hits) == 0:
        return False, None
    return True, float(t[1:][hits[0]])
