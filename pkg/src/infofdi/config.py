"""Scenario configuration: YAML schema, validation and overrides.

See ``docs/config_schema.md`` for the full key reference.  Unknown keys are
rejected so typos never silently fall back to defaults.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .dynamics import OrbitParams, RelativeState, pro_state
from .faults import FaultSpec
from .fdi import FdiConfig
from .geometry import SensorModel

SCHEMA_VERSION = 1
DEFAULT_MEAN_MOTION = 0.00113


class ConfigError(ValueError):
    pass


@dataclass
class TargetConfig:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0
    poi_count: int = 5000
    poi_seed: Optional[int] = None
    prior_variance: float = 1.0
    importance: float = 1.0
    pois: Optional[list] = None  # explicit [{location, importance, prior_variance}]


@dataclass
class AgentConfig:
    id: str
    sensor: SensorModel
    state: Optional[RelativeState] = None
    x: Optional[float] = None
    step: Optional[float] = None


@dataclass
class AnalyticConfig:
    a: float = 1.0
    variance_gain: float = 1.0
    prior_information: float = 0.0
    importance: float = 0.5


@dataclass
class ScenarioConfig:
    seed: int
    duration: float
    dt: float
    agents: list
    target: TargetConfig = field(default_factory=TargetConfig)
    fdi: FdiConfig = field(default_factory=FdiConfig)
    faults: list = field(default_factory=list)
    mode: str = "sphere3d"
    name: str = "scenario"
    mean_motion: float = DEFAULT_MEAN_MOTION
    allocation: str = "partition"
    prediction: str = "counterfactual"
    fusion: str = "accumulated"
    rate_scale: float = 1.0
    nominal_noise_std: float = 0.0
    parallel: bool = False
    output_dir: Optional[str] = None
    analytic: Optional[AnalyticConfig] = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def orbit(self) -> OrbitParams:
        return OrbitParams(self.mean_motion)

    @property
    def window(self) -> float:
        if self.fdi.window is not None:
            return self.fdi.window
        return 2.0 * self.orbit.period

    @property
    def agent_ids(self) -> list:
        return [a.id for a in self.agents]

    def fault_ids(self) -> list:
        return [f.fault_id for f in self.faults]


_TOP_KEYS = {
    "schema_version", "name", "mode", "seed", "duration", "dt", "mean_motion",
    "allocation", "prediction", "fusion", "rate_scale", "nominal_noise_std", "parallel",
    "output_dir", "fdi", "target", "agents", "faults", "analytic",
}
_FDI_KEYS = {
    "window", "tick", "epsilon_neighborhood_deg", "threshold_samples", "epsilon_nom",
    "classification_epsilon", "threshold_floor", "global_delta_threshold",
    "global_absolute", "degeneracy_floor",
}
_TARGET_KEYS = {"center", "radius", "poi_count", "poi_seed", "prior_variance", "importance", "pois"}
_POI_KEYS = {"location", "importance", "prior_variance"}
_AGENT_KEYS = {"id", "pro", "state", "x", "step", "sensor"}
_PRO_KEYS = {"radial_amplitude", "phase_deg", "cross_amplitude", "cross_phase_deg", "along_offset"}
_STATE_KEYS = {"position", "velocity"}
_SENSOR_KEYS = {"half_angle_deg", "variance_gain", "degradation"}
_FAULT_KEYS = {
    "id", "agent", "kind", "start_time", "bias", "noise_std", "channel", "direction",
    "angle_deg", "axis", "beta", "seed",
}
_ANALYTIC_KEYS = {"a", "variance_gain", "prior_information", "importance"}


def _check_keys(d: Any, allowed: set, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{where}: unknown key {k!r}")
    return d


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return d[key]


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _sensor(d: dict, where: str) -> SensorModel:
    _check_keys(d, _SENSOR_KEYS, where)
    return _wrap(
        where,
        SensorModel,
        half_angle=np.deg2rad(float(d.get("half_angle_deg", 20.0))),
        variance_gain=float(d.get("variance_gain", 1.0)),
        degradation=float(d.get("degradation", 1.0)),
    )


def _agent(d: dict, i: int, orbit: OrbitParams, mode: str) -> AgentConfig:
    where = f"agents[{i}]"
    _check_keys(d, _AGENT_KEYS, where)
    aid = str(_require(d, "id", where))
    sensor = _sensor(d.get("sensor", {}), f"{where}.sensor")
    if mode == "analytic1dof":
        if "x" not in d:
            raise ConfigError(f"{where}: analytic agents need key 'x'")
        return AgentConfig(aid, sensor, x=float(d["x"]), step=float(d.get("step", 0.0)))
    if ("pro" in d) == ("state" in d):
        raise ConfigError(f"{where}: give exactly one of 'pro' or 'state'")
    if "pro" in d:
        p = _check_keys(d["pro"], _PRO_KEYS, f"{where}.pro")
        state = _wrap(
            f"{where}.pro",
            pro_state,
            orbit,
            float(_require(p, "radial_amplitude", f"{where}.pro")),
            np.deg2rad(float(p.get("phase_deg", 0.0))),
            float(p.get("cross_amplitude", 0.0)),
            np.deg2rad(float(p.get("cross_phase_deg", 0.0))),
            float(p.get("along_offset", 0.0)),
        )
    else:
        s = _check_keys(d["state"], _STATE_KEYS, f"{where}.state")
        state = _wrap(
            f"{where}.state",
            RelativeState,
            _require(s, "position", f"{where}.state"),
            s.get("velocity", [0.0, 0.0, 0.0]),
        )
    return AgentConfig(aid, sensor, state=state)


def _fault(d: dict, i: int) -> FaultSpec:
    where = f"faults[{i}]"
    _check_keys(d, _FAULT_KEYS, where)
    kw = {k: v for k, v in d.items() if k not in ("id", "agent")}
    for key in ("start_time", "noise_std", "angle_deg", "beta"):
        if kw.get(key) is not None:
            kw[key] = float(kw[key])
    return _wrap(
        where,
        FaultSpec,
        agent_id=str(_require(d, "agent", where)),
        fault_id=str(d.get("id", f"fault{i + 1}")),
        **kw,
    )


def parse_config(data: Any) -> ScenarioConfig:
    if not data:
        raise ConfigError("configuration is empty")
    _check_keys(data, _TOP_KEYS, "config")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config: unsupported schema_version {version!r}")
    mode = data.get("mode", "sphere3d")
    if mode not in ("sphere3d", "analytic1dof"):
        raise ConfigError(f"config: unknown mode {mode!r}")
    mean_motion = float(data.get("mean_motion", DEFAULT_MEAN_MOTION))
    orbit = _wrap("mean_motion", OrbitParams, mean_motion)

    fdi_raw = _check_keys(data.get("fdi", {}) or {}, _FDI_KEYS, "fdi")
    fdi = _wrap("fdi", FdiConfig, **fdi_raw)

    target_raw = _check_keys(data.get("target", {}) or {}, _TARGET_KEYS, "target")
    target = TargetConfig(**target_raw)
    if target.pois is not None:
        for j, p in enumerate(target.pois):
            _check_keys(p, _POI_KEYS, f"target.pois[{j}]")
    elif int(target.poi_count) < 1:
        raise ConfigError("target.poi_count: need at least one POI")
    if not float(target.radius) > 0.0:
        raise ConfigError("target.radius: must be positive")

    agents_raw = _require(data, "agents", "config")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise ConfigError("agents: need at least one agent")
    agents = [_agent(a, i, orbit, mode) for i, a in enumerate(agents_raw)]
    ids = [a.id for a in agents]
    dupes = sorted({x for x in ids if ids.count(x) > 1})
    if dupes:
        raise ConfigError(f"agents: duplicate agent id {dupes[0]!r}")

    faults = [_fault(f, i) for i, f in enumerate(data.get("faults", []) or [])]
    for f in faults:
        if f.agent_id not in ids:
            raise ConfigError(f"faults[{f.fault_id}].agent: unknown agent {f.agent_id!r}")
    fids = [f.fault_id for f in faults]
    if len(set(fids)) != len(fids):
        raise ConfigError("faults: duplicate fault id")

    analytic = None
    if "analytic" in data:
        analytic = AnalyticConfig(**_check_keys(data["analytic"], _ANALYTIC_KEYS, "analytic"))
    elif mode == "analytic1dof":
        analytic = AnalyticConfig()

    cfg = ScenarioConfig(
        seed=int(_require(data, "seed", "config")),
        duration=float(_require(data, "duration", "config")),
        dt=float(data.get("dt", 1.0)),
        agents=agents,
        target=target,
        fdi=fdi,
        faults=faults,
        mode=mode,
        name=str(data.get("name", "scenario")),
        mean_motion=mean_motion,
        allocation=data.get("allocation", "partition"),
        prediction=data.get("prediction", "counterfactual"),
        fusion=data.get("fusion", "accumulated"),
        rate_scale=float(data.get("rate_scale", 1.0)),
        nominal_noise_std=float(data.get("nominal_noise_std", 0.0)),
        parallel=bool(data.get("parallel", False)),
        output_dir=data.get("output_dir"),
        analytic=analytic,
        raw=copy.deepcopy(data),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    if not cfg.duration > 0.0:
        raise ConfigError("duration: must be positive")
    if not cfg.dt > 0.0:
        raise ConfigError("dt: must be positive")
    if cfg.mode == "sphere3d" and cfg.dt > cfg.window:
        raise ConfigError("dt: must not exceed fdi.window")
    if cfg.allocation not in ("shared", "partition"):
        raise ConfigError(f"allocation: unknown value {cfg.allocation!r}")
    if cfg.prediction not in ("counterfactual", "twin"):
        raise ConfigError(f"prediction: unknown value {cfg.prediction!r}")
    if cfg.fusion not in ("accumulated", "instantaneous"):
        raise ConfigError(f"fusion: unknown value {cfg.fusion!r}")
    if not cfg.rate_scale > 0.0:
        raise ConfigError("rate_scale: must be positive")
    if cfg.nominal_noise_std < 0.0:
        raise ConfigError("nominal_noise_std: must be >= 0")


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.path=value`` overrides; values are parsed as YAML scalars."""
    data = copy.deepcopy(data) if data else {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        path, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        keys = path.strip().split(".")
        node = data
        for k in keys[:-1]:
            node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return data


def read_config_data(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc


def load_config(path, overrides=()) -> ScenarioConfig:
    return parse_config(apply_overrides(read_config_data(path), overrides))


def builtin_path(name: str) -> Path:
    """Path of a reference scenario shipped with the package."""
    fname = name if name.endswith(".yaml") else f"{name}.yaml"
    ref = resources.files("infofdi") / "scenarios" / fname
    if not ref.is_file():
        raise ConfigError(f"no built-in scenario named {name!r}")
    return Path(str(ref))


def builtin_names() -> list:
    root = resources.files("infofdi") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_builtin(name: str, overrides=()) -> ScenarioConfig:
    return load_config(builtin_path(name), overrides)
