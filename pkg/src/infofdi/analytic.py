"""Two planar 1-DOF observers and two POIs: the closed-form detection example.

Agents sit at ``(x_i, 0)`` and POIs at ``(a, a)`` and ``(-a, -a)``; every POI
is always visible.  Over one commanded step the predicted and realized
changes of each agent's attributed cost are linearized with the analytic
cost gradient, with the consensus normalization held at its start value:

    dH_pred = g_i * dx_i,     dH_real = beta_i * g_i * dx_i_real

so the ratio reduces to ``beta_i * dx_real / dx``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import faults as F
from .config import ScenarioConfig
from .dynamics import step_1dof
from .fdi import AgentWindowRecord, DetectionLatch, classify, detect, fault_metric, ratio
from .geometry import PoiField, Pose, inverse_variance
from .info_cost import decompose, gradient_1dof
from .report import RunReport, summarize


@dataclass
class AgentStep:
    agent_id: str
    x: float
    step: float
    step_real: float
    beta: float
    gradient: float
    dH_pred: float
    dH_real: float
    r: float
    metric: float
    classification: str


def fixture_pois(a: float, importance: float, prior_information: float) -> PoiField:
    w = np.inf if prior_information == 0.0 else 1.0 / prior_information
    return PoiField(
        locations=np.array([[a, a, 0.0], [-a, -a, 0.0]]),
        importance=importance,
        prior_variance=w,
    )


def planar_inverse_variances(pois: PoiField, xs, variance_gain: float, betas=None) -> np.ndarray:
    """(N, M) information matrix for agents at ``(x, 0, 0)``, all POIs visible."""
    from .geometry import SensorModel

    betas = np.ones(len(xs)) if betas is None else np.asarray(betas, dtype=float)
    rows = []
    for x, beta in zip(xs, betas):
        sensor = SensorModel(np.pi / 2, variance_gain, beta)
        pose = Pose([x, 0.0, 0.0], [1.0, 0.0, 0.0])
        rows.append([inverse_variance(pose, p, sensor, (0, 0, 0), check_visibility=False) for p in pois])
    return np.array(rows)


def run_analytic(cfg: ScenarioConfig) -> RunReport:
    an = cfg.analytic
    pois = fixture_pois(an.a, an.importance, an.prior_information)
    ids = cfg.agent_ids
    xs = np.array([a.x for a in cfg.agents])
    steps = np.array([a.step for a in cfg.agents])
    t0, t1 = 0.0, cfg.dt

    betas = np.ones(len(ids))
    steps_real = steps.copy()
    for i, aid in enumerate(ids):
        for f in cfg.faults:
            if f.agent_id != aid or not f.active(t0):
                continue
            if f.kind == F.ACTUATOR_STATE:
                spec = replace(f, channel="step")
                steps_real[i] = F.inject_actuator_state(steps_real[i], spec, t0, F.fault_stream(cfg.seed, f))
            elif f.kind == F.SENSOR_DEGRADATION:
                betas[i] *= f.beta
            else:
                raise ValueError(f"fault kind {f.kind!r} has no 1-DOF counterpart")

    nominal_inv = planar_inverse_variances(pois, xs, an.variance_gain)
    start = decompose(pois, nominal_inv, ids)
    h_prev = start.contributions
    poi_xy = pois.locations[:, :2]

    rows, records = [], []
    for i, aid in enumerate(ids):
        others = nominal_inv.sum(axis=0) - nominal_inv[i]
        g = gradient_1dof(xs[i], others, poi_xy, an.variance_gain, pois.importance, pois.prior_variance)
        d_pred = g * steps[i]
        d_real = betas[i] * g * steps_real[i]
        rec = AgentWindowRecord(aid, h_prev[i], h_prev[i] + d_real, h_prev[i] + d_pred)
        records.append(rec)
        rows.append(
            AgentStep(
                aid, xs[i], steps[i], steps_real[i], betas[i], g, d_pred, d_real,
                ratio(rec) if d_pred != 0.0 else float("nan"),
                fault_metric(rec, cfg.fdi.degeneracy_floor),
                classify(rec, cfg.fdi.classification_epsilon, cfg.fdi.degeneracy_floor),
            )
        )

    taus = [cfg.fdi.threshold_floor] * len(ids)
    fault_times = {f.agent_id: f.start_time for f in cfg.faults}
    hits = detect(records, taus, cfg.fdi, t1, fault_times)
    latch = DetectionLatch()
    latch.update(hits)

    real_xs = [step_1dof(x, s) for x, s in zip(xs, steps_real)]
    pred_xs = [step_1dof(x, s) for x, s in zip(xs, steps)]
    H_real = decompose(pois, planar_inverse_variances(pois, real_xs, an.variance_gain, betas)).global_cost
    H_nom = decompose(pois, planar_inverse_variances(pois, pred_xs, an.variance_gain)).global_cost

    n = len(ids)
    report = RunReport(
        name=cfg.name,
        agent_ids=ids,
        times=np.array([t0, t1]),
        H=np.array([start.global_cost, H_real]),
        H_pred=np.array([start.global_cost, H_nom]),
        Hi=np.vstack([h_prev, [r.H_actual for r in records]]),
        Hi_pred=np.vstack([h_prev, [r.H_pred for r in records]]),
        Hm=np.vstack([np.full(n, np.nan), [r.metric for r in rows]]),
        tau=np.vstack([np.full(n, np.nan), taus]),
        detections=latch.all(),
    )
    first = {d.agent_id: d for d in hits}
    report.summary = summarize(cfg, report, first)
    report.extra["steps"] = rows
    return report


def format_table(cases) -> str:
    """Plain-text table of ``(label, RunReport)`` pairs from analytic runs."""
    lines = [f"{'case':<22}{'agent':<8}{'dx':>8}{'dx_real':>10}{'beta':>7}{'r':>10}{'Hm':>10}  class"]
    for label, rep in cases:
        for s in rep.extra["steps"]:
            lines.append(
                f"{label:<22}{s.agent_id:<8}{s.step:>8.3f}{s.step_real:>10.3f}{s.beta:>7.2f}"
                f"{s.r:>10.6f}{s.metric:>10.6f}  {s.classification}"
            )
    return "\n".join(lines)
