"""Seeded fault injection into agent motion, pointing and sensing.

Every fault owns a random stream keyed on (master seed, agent id, kind,
fault seed), so adding or removing one fault never shifts the noise seen by
another agent.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import RelativeState
from .geometry import SensorModel, perpendicular, rotate_about, unit

ACTUATOR_STATE = "actuator_state"
ACTUATOR_POINTING = "actuator_pointing"
SENSOR_DEGRADATION = "sensor_degradation"
SENSOR_BLACKOUT = "sensor_blackout"
KINDS = (ACTUATOR_STATE, ACTUATOR_POINTING, SENSOR_DEGRADATION, SENSOR_BLACKOUT)
POINTING_KINDS = (ACTUATOR_POINTING, SENSOR_BLACKOUT)


@dataclass(frozen=True)
class FaultSpec:
    """One injected fault.

    Kind-specific magnitudes:

    * ``actuator_state``: ``bias`` (scalar along ``direction`` or a
      3-vector) and ``noise_std`` added to the ``channel`` ("velocity",
      "position", or "step" for 1-DOF agents) every tick.
    * ``actuator_pointing`` / ``sensor_blackout``: rotation by ``angle_deg``
      about ``axis`` (default: a fixed axis perpendicular to the pointing;
      "random" draws one per tick) plus ``noise_std`` degrees of jitter.
    * ``sensor_degradation``: information scale ``beta``.
    """

    agent_id: str
    kind: str
    start_time: float = 0.0
    bias: Union[float, Sequence[float]] = 0.0
    noise_std: float = 0.0
    channel: str = "velocity"
    direction: Union[str, Sequence[float]] = "radial"
    angle_deg: Optional[float] = None
    axis: Union[None, str, Sequence[float]] = None
    beta: Optional[float] = None
    seed: int = 0
    fault_id: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if not self.start_time >= 0.0:
            raise ValueError("start_time must be >= 0")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be >= 0")
        if self.kind == SENSOR_DEGRADATION:
            if self.beta is None or not 0.0 < self.beta < 1.0:
                raise ValueError(f"sensor_degradation needs beta in (0, 1), got {self.beta}")
        if self.kind in POINTING_KINDS:
            angle = self.misalignment_deg
            if not 0.0 < angle <= 180.0:
                raise ValueError(f"misalignment angle must lie in (0, 180] deg, got {angle}")
        if self.kind == ACTUATOR_STATE and self.channel not in ("velocity", "position", "step"):
            raise ValueError(f"unknown actuator channel {self.channel!r}")

    @property
    def misalignment_deg(self) -> float:
        if self.angle_deg is not None:
            return float(self.angle_deg)
        return 180.0 if self.kind == SENSOR_BLACKOUT else 0.0

    def active(self, t: float) -> bool:
        return t >= self.start_time


def stable_hash(text: str) -> int:
    return zlib.crc32(str(text).encode("utf-8"))


def fault_stream(master_seed: int, spec: FaultSpec) -> np.random.Generator:
    seq = np.random.SeedSequence(
        [int(master_seed) & 0xFFFFFFFF, stable_hash(spec.agent_id), KINDS.index(spec.kind), int(spec.seed)]
    )
    return np.random.default_rng(seq)


def _require(spec: FaultSpec, *kinds):
    if spec.kind not in kinds:
        raise ValueError(f"fault kind {spec.kind!r} does not apply here (expected one of {kinds})")


def _bias_vector(spec: FaultSpec, position) -> np.ndarray:
    bias = np.asarray(spec.bias, dtype=float)
    if bias.ndim == 1:
        return bias.reshape(3)
    if bias == 0.0:
        return np.zeros(3)
    if isinstance(spec.direction, str):
        if spec.direction != "radial":
            raise ValueError(f"unknown bias direction {spec.direction!r}")
        return float(bias) * unit(position)
    return float(bias) * unit(spec.direction)


def inject_actuator_state(state, spec: FaultSpec, t: float, rng: np.random.Generator):
    """Corrupt the realized motion of an agent at time ``t``.

    ``state`` is either a :class:`RelativeState` or a scalar 1-DOF step.
    Before ``spec.start_time`` the input is returned untouched.
    """
    _require(spec, ACTUATOR_STATE)
    if not spec.active(t):
        return state
    if not isinstance(state, RelativeState):
        noise = rng.normal(0.0, spec.noise_std) if spec.noise_std > 0.0 else 0.0
        return float(state) + float(np.asarray(spec.bias, dtype=float)) + noise
    delta = _bias_vector(spec, state.position)
    if spec.noise_std > 0.0:
        delta = delta + rng.normal(0.0, spec.noise_std, 3)
    if spec.channel == "position":
        return RelativeState(state.position + delta, state.velocity)
    return RelativeState(state.position, state.velocity + delta)


def inject_pointing_misalignment(pointing, spec: FaultSpec, rng: np.random.Generator) -> np.ndarray:
    """Rotate a unit pointing vector by the configured misalignment."""
    _require(spec, *POINTING_KINDS)
    pointing = unit(pointing)
    angle = np.deg2rad(spec.misalignment_deg)
    if spec.noise_std > 0.0:
        angle += np.deg2rad(rng.normal(0.0, spec.noise_std))
    if spec.axis is None:
        axis = perpendicular(pointing)
    elif isinstance(spec.axis, str):
        if spec.axis != "random":
            raise ValueError(f"unknown axis mode {spec.axis!r}")
        g = rng.standard_normal(3)
        g -= np.dot(g, pointing) * pointing
        axis = unit(g)
    else:
        a = np.asarray(spec.axis, dtype=float)
        a = a - np.dot(a, pointing) * pointing
        axis = perpendicular(pointing) if np.linalg.norm(a) < 1e-12 else unit(a)
    return unit(rotate_about(pointing, axis, angle))


def inject_sensor_degradation(sensor: SensorModel, spec: FaultSpec) -> SensorModel:
    _require(spec, SENSOR_DEGRADATION)
    if not 0.0 < spec.beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {spec.beta}")
    return sensor.degraded(spec.beta)
