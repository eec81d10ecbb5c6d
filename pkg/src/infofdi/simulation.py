"""Sphere-inspection simulation loop with fault-free predictions per FDI window.

Tick ``k`` at ``t = k * dt`` runs, in order: pointing policy (plus pointing
faults), observation and cost decomposition, information accumulation, and
HCW propagation to the next tick (plus actuator faults and nominal noise).

Accumulated information is kept as per-agent ledgers since the window
start, ``A = A_start + sum_i L_i``.  At every window start the real world
is snapshotted and a twin without faults or noise runs over the whole
window; it gives the predicted global cost and the planned agent positions.
Under ``partition`` allocation the POIs are split every tick by nearest
planned agent direction, so a faulty agent cannot move other agents' shares.

Per-agent predictions come from one of two sources:

``counterfactual`` (default)
    Agent ``i``'s predicted contribution replaces only agent ``i`` by a
    fault-free ghost (planned trajectory, nominal sensor, its own ghost
    ledger) while every other agent keeps its realized observations.  A
    nominal agent therefore matches its prediction bit for bit whatever the
    other agents do.
``twin``
    Contributions of the whole-world twin.  Faults leak into nominal agents
    whenever information they gathered is later seen by someone else.
"""

from __future__ import annotations

import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import faults as F
from .config import ScenarioConfig
from .dynamics import RelativeState, propagate_hcw
from .fdi import (
    AgentWindowRecord,
    DetectionLatch,
    detect,
    fault_metric,
    global_detect,
    perturbed_contributions,
    sample_cone,
    threshold_from_samples,
)
from .geometry import PoiField, Pose, SensorModel, inverse_variances, sample_sphere_pois, unit, visible_ids
from .info_cost import CostBreakdown, decompose, pointing_policy
from .report import RunReport, summarize

log = logging.getLogger(__name__)

_NOISE_STREAM = 101
_THRESHOLD_STREAM = 202


@dataclass
class Agent:
    id: str
    state: RelativeState
    sensor: SensorModel
    aim: np.ndarray
    has_target: bool = False


@dataclass
class TickObservation:
    t: float
    cost: CostBreakdown
    inv: np.ndarray
    poses: list
    sensors: list
    aims: list

    @property
    def contributions(self) -> np.ndarray:
        return self.cost.contributions


def build_pois(cfg: ScenarioConfig) -> PoiField:
    tgt = cfg.target
    if tgt.pois is not None:
        return PoiField(
            locations=np.array([p["location"] for p in tgt.pois], dtype=float),
            importance=np.array([p.get("importance", tgt.importance) for p in tgt.pois], dtype=float),
            prior_variance=np.array([p.get("prior_variance", tgt.prior_variance) for p in tgt.pois], dtype=float),
        )
    seed = cfg.seed if tgt.poi_seed is None else tgt.poi_seed
    return sample_sphere_pois(
        int(tgt.poi_count), float(tgt.radius), int(seed), tgt.center, float(tgt.prior_variance), float(tgt.importance)
    )


def agent_stream(seed: int, agent_id: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, F.stable_hash(agent_id), *extra]))


def partition_pois(pois: PoiField, positions, center) -> np.ndarray:
    """Boolean (N, M) mask giving each POI to the agent whose direction is nearest."""
    normals = pois.locations - np.asarray(center, dtype=float)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    dirs = np.array([unit(np.asarray(p) - center) for p in positions])
    owner = np.argmax(dirs @ normals.T, axis=0)
    return owner[None, :] == np.arange(len(dirs))[:, None]


def ledger_information(start: np.ndarray, ledgers: np.ndarray) -> np.ndarray:
    """Accumulated information from the window-start value and per-agent ledgers."""
    return start + ledgers.sum(axis=0)


class World:
    """Mutable simulation state; ``inject=False`` gives the fault-free twin."""

    def __init__(self, cfg: ScenarioConfig, pois: PoiField, agents: list, inject: bool = True):
        self.cfg = cfg
        self.pois = pois
        self.agents = agents
        self.inject = inject
        self.center = np.asarray(cfg.target.center, dtype=float)
        self.k = 0
        self.assignment: Optional[np.ndarray] = None
        self.start_info = pois.accumulated.copy()
        self.ledgers = np.zeros((len(agents), len(pois)))
        self.faults = {a.id: [f for f in cfg.faults if f.agent_id == a.id] for a in agents}
        self.fault_rngs = {f.fault_id: F.fault_stream(cfg.seed, f) for f in cfg.faults}
        self.noise_rngs = {a.id: agent_stream(cfg.seed, a.id, _NOISE_STREAM) for a in agents}
        self._pool = ThreadPoolExecutor(max_workers=len(agents)) if cfg.parallel else None

    @property
    def t(self) -> float:
        return self.k * self.cfg.dt

    @property
    def step_information(self) -> float:
        return self.cfg.dt * self.cfg.rate_scale

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "World":
        agents = [Agent(a.id, a.state, a.sensor, unit(a.state.position)) for a in cfg.agents]
        return cls(cfg, build_pois(cfg), agents)

    def start_window(self) -> None:
        """Fold the per-agent ledgers into the window-start information."""
        self.start_info = self.pois.accumulated.copy()
        self.ledgers = np.zeros_like(self.ledgers)

    def twin(self) -> "World":
        """Fault-free copy of the current state."""
        w = copy.copy(self)
        w.pois = self.pois.copy()
        w.agents = [copy.copy(a) for a in self.agents]
        w.start_info = self.start_info.copy()
        w.ledgers = self.ledgers.copy()
        w.inject = False
        w.fault_rngs = {}
        w.noise_rngs = {}
        w._pool = None
        return w

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def map(self, fn, items):
        if self._pool is None:
            return [fn(x) for x in items]
        return list(self._pool.map(fn, items))

    def _active(self, agent_id: str, kinds):
        if not self.inject:
            return []
        return [f for f in self.faults[agent_id] if f.kind in kinds and f.active(self.t)]

    def candidates(self, i: int):
        return None if self.assignment is None else self.assignment[i]

    def reassign(self, positions=None) -> None:
        """Partition POIs by nearest agent direction; ``positions`` defaults to the current ones."""
        if self.cfg.allocation == "partition":
            if positions is None:
                positions = [a.state.position for a in self.agents]
            self.assignment = partition_pois(self.pois, positions, self.center)
        else:
            self.assignment = None

    def _agent_view(self, i: int):
        a = self.agents[i]
        cand = self.candidates(i)
        aim, found = pointing_policy(Pose(a.state.position, a.aim), self.pois, a.sensor, self.center, cand)
        a.aim, a.has_target = aim, found
        pointing = aim
        for f in self._active(a.id, F.POINTING_KINDS):
            pointing = F.inject_pointing_misalignment(pointing, f, self.fault_rngs[f.fault_id])
        sensor = a.sensor
        for f in self._active(a.id, (F.SENSOR_DEGRADATION,)):
            sensor = F.inject_sensor_degradation(sensor, f)
        pose = Pose(a.state.position, pointing)
        row = inverse_variances(pose, self.pois.locations, sensor, self.center, cand)
        return pose, sensor, row

    def observe(self) -> TickObservation:
        views = self.map(self._agent_view, range(len(self.agents)))
        inv = np.vstack([v[2] for v in views])
        cost = decompose(self.pois, inv, [a.id for a in self.agents])
        return TickObservation(
            self.t, cost, inv, [v[0] for v in views], [v[1] for v in views], [a.aim.copy() for a in self.agents]
        )

    def _advance_agent(self, i: int) -> RelativeState:
        a = self.agents[i]
        state = propagate_hcw(a.state, self.cfg.dt, self.cfg.orbit)
        for f in self._active(a.id, (F.ACTUATOR_STATE,)):
            state = F.inject_actuator_state(state, f, self.t, self.fault_rngs[f.fault_id])
        if self.inject and self.cfg.nominal_noise_std > 0.0:
            noise = self.noise_rngs[a.id].normal(0.0, self.cfg.nominal_noise_std, 3)
            state = RelativeState(state.position + noise, state.velocity)
        return state

    def advance(self, obs: TickObservation) -> None:
        if self.cfg.fusion == "accumulated":
            self.ledgers += obs.inv * self.step_information
            self.pois.accumulated = ledger_information(self.start_info, self.ledgers)
        states = self.map(self._advance_agent, range(len(self.agents)))
        for a, s in zip(self.agents, states):
            a.state = s
        self.k += 1


@dataclass
class GhostView:
    contribution: float
    visible: frozenset
    row: np.ndarray
    samples: Optional[list] = None


class Counterfactual:
    """Fault-free ghosts, one per agent, evaluated against the realized world.

    Ghost ``i`` follows agent ``i``'s planned trajectory with its nominal
    sensor and keeps its own information ledger; the fused variances it
    sees combine that ledger with every other agent's realized ledger.
    """

    def __init__(self, world: World):
        self.states = [a.state for a in world.agents]
        self.aims = [a.aim.copy() for a in world.agents]
        self.ledgers = world.ledgers.copy()

    def _view(self, world: World, obs: TickObservation, i: int, rng) -> GhostView:
        a = world.agents[i]
        ledgers = world.ledgers.copy()
        ledgers[i] = self.ledgers[i]
        pois = world.pois.with_accumulated(ledger_information(world.start_info, ledgers))
        cand = world.candidates(i)
        aim, _ = pointing_policy(Pose(self.states[i].position, self.aims[i]), pois, a.sensor, world.center, cand)
        self.aims[i] = aim
        pose = Pose(self.states[i].position, aim)
        row = inverse_variances(pose, pois.locations, a.sensor, world.center, cand)
        inv = obs.inv.copy()
        inv[i] = row
        share = decompose(pois, inv).contributions[i]
        samples = None
        if rng is not None:
            fdi = world.cfg.fdi
            dirs = sample_cone(aim, np.deg2rad(fdi.epsilon_neighborhood_deg), fdi.threshold_samples, rng)
            samples = perturbed_contributions(pois, inv, i, pose, a.sensor, world.center, dirs, cand)
        return GhostView(share, visible_ids(row > 0.0), row, samples)

    def evaluate(self, world: World, obs: TickObservation, rngs=None) -> list[GhostView]:
        n = len(world.agents)
        return world.map(lambda i: self._view(world, obs, i, None if rngs is None else rngs[i]), range(n))

    def advance(self, world: World, views: list[GhostView]) -> None:
        if world.cfg.fusion == "accumulated":
            self.ledgers += np.vstack([v.row for v in views]) * world.step_information
        self.states = world.map(lambda s: propagate_hcw(s, world.cfg.dt, world.cfg.orbit), self.states)


@dataclass
class Prediction:
    """Twin output for one window, indexed by tick offset from the window start."""

    start: int
    contributions: np.ndarray  # (n_ticks, N)
    global_cost: np.ndarray  # (n_ticks,)
    positions: np.ndarray = None  # (n_ticks, N, 3) planned agent positions
    visible: dict = field(default_factory=dict)  # offset -> list of frozensets
    samples: dict = field(default_factory=dict)  # offset -> list of sample lists


def _threshold_samples(twin: World, obs: TickObservation, i: int, rng: np.random.Generator) -> list:
    fdi = twin.cfg.fdi
    dirs = sample_cone(obs.aims[i], np.deg2rad(fdi.epsilon_neighborhood_deg), fdi.threshold_samples, rng)
    return perturbed_contributions(
        twin.pois, obs.inv, i, obs.poses[i], obs.sensors[i], twin.center, dirs, twin.candidates(i)
    )


def predict_nominal(world: World, n_ticks: int, diag_offsets=(), rngs=None) -> Prediction:
    """Run a fault-free twin of ``world`` for ``n_ticks`` ticks.

    At each offset in ``diag_offsets`` the twin also records predicted
    visible sets and epsilon-neighborhood threshold samples per agent.
    """
    twin = world.twin()
    diag = set(diag_offsets)
    n = len(twin.agents)
    contrib = np.empty((n_ticks, n))
    gcost = np.empty(n_ticks)
    pred = Prediction(world.k, contrib, gcost, np.empty((n_ticks, n, 3)))
    for j in range(n_ticks):
        pred.positions[j] = [a.state.position for a in twin.agents]
        twin.reassign(pred.positions[j])
        obs = twin.observe()
        contrib[j] = obs.contributions
        gcost[j] = obs.cost.global_cost
        if j in diag:
            pred.visible[j] = [visible_ids(row > 0.0) for row in obs.inv]
            pred.samples[j] = [_threshold_samples(twin, obs, i, rngs[i]) for i in range(n)]
        if j + 1 < n_ticks:
            twin.advance(obs)
    return pred


def run(cfg: ScenarioConfig) -> RunReport:
    """Execute a scenario end to end and return the report."""
    if cfg.mode == "analytic1dof":
        from .analytic import run_analytic

        return run_analytic(cfg)
    return _run_sphere(cfg)


def _run_sphere(cfg: ScenarioConfig) -> RunReport:
    world = World.from_config(cfg)
    ids = cfg.agent_ids
    n = len(ids)
    n_steps = int(round(cfg.duration / cfg.dt))
    window_ticks = max(1, int(round(cfg.window / cfg.dt)))
    diag_every = max(1, int(round(cfg.fdi.tick / cfg.dt)))
    use_twin = cfg.prediction == "twin"
    fault_times = {}
    for f in cfg.faults:
        fault_times[f.agent_id] = min(f.start_time, fault_times.get(f.agent_id, np.inf))

    times = np.arange(n_steps + 1) * cfg.dt
    H = np.empty(n_steps + 1)
    H_pred = np.empty(n_steps + 1)
    Hi = np.empty((n_steps + 1, n))
    Hi_pred = np.empty((n_steps + 1, n))
    Hm = np.full((n_steps + 1, n), np.nan)
    tau = np.full((n_steps + 1, n), np.nan)

    latch = DetectionLatch()
    first_after_fault: dict = {}
    pred: Optional[Prediction] = None
    ghosts: Optional[Counterfactual] = None
    h_prev = None
    window = -1
    k = 0
    try:
        for k in range(n_steps + 1):
            offset = k % window_ticks
            if offset == 0:
                window += 1
                world.start_window()
                n_ticks = min(window_ticks, n_steps + 1 - k)
                rngs = [agent_stream(cfg.seed, a, _THRESHOLD_STREAM, window) for a in ids]
                if use_twin:
                    pred = predict_nominal(world, n_ticks, range(diag_every, n_ticks, diag_every), rngs)
                else:
                    pred = predict_nominal(world, n_ticks)
                    ghosts = Counterfactual(world)
            diagnostic = offset > 0 and offset % diag_every == 0
            world.reassign(pred.positions[offset])
            obs = world.observe()
            H[k] = obs.cost.global_cost
            Hi[k] = obs.contributions
            H_pred[k] = pred.global_cost[offset]
            views = None
            if use_twin:
                Hi_pred[k] = pred.contributions[offset]
            else:
                views = ghosts.evaluate(world, obs, rngs if diagnostic else None)
                Hi_pred[k] = [v.contribution for v in views]
            if offset == 0:
                h_prev = Hi[k].copy()
            elif diagnostic:
                if use_twin:
                    visible_pred, samples = pred.visible[offset], pred.samples[offset]
                else:
                    visible_pred, samples = [v.visible for v in views], [v.samples for v in views]
                actual_sets = [visible_ids(row > 0.0) for row in obs.inv]
                records = [
                    AgentWindowRecord(ids[i], h_prev[i], Hi[k, i], Hi_pred[k, i], visible_pred[i], actual_sets[i])
                    for i in range(n)
                ]
                taus = [
                    threshold_from_samples(rec, samples[i], cfg.fdi.threshold_floor, True, cfg.fdi.degeneracy_floor)
                    for i, rec in enumerate(records)
                ]
                Hm[k] = [fault_metric(r, cfg.fdi.degeneracy_floor) for r in records]
                tau[k] = taus
                hits = detect(records, taus, cfg.fdi, times[k], fault_times, window)
                latch.update(hits)
                for d in hits:
                    t_fault = fault_times.get(d.agent_id)
                    if t_fault is not None and d.time >= t_fault and d.agent_id not in first_after_fault:
                        first_after_fault[d.agent_id] = d
            if k < n_steps:
                world.advance(obs)
                if views is not None:
                    ghosts.advance(world, views)
    except Exception as exc:
        raise RuntimeError(f"simulation aborted at tick {k} (t={k * cfg.dt:g} s): {exc}") from exc
    finally:
        world.close()

    glob = global_detect(times, H, H_pred, cfg.fdi.global_delta_threshold, cfg.fdi.global_absolute)
    report = RunReport(
        name=cfg.name,
        agent_ids=ids,
        times=times,
        H=H,
        H_pred=H_pred,
        Hi=Hi,
        Hi_pred=Hi_pred,
        Hm=Hm,
        tau=tau,
        detections=latch.all(),
        global_detection=glob,
    )
    report.summary = summarize(cfg, report, first_after_fault)
    return report
