"""Relative-orbit propagation about a circular target orbit.

State vectors are ordered ``[x, y, z, vx, vy, vz]`` in the target-centered
LVLH frame (x radial, y along-track, z cross-track), SI units.  The
unforced HCW equations are

    xdd =  3 n^2 x + 2 n yd + ax
    ydd = -2 n xd           + ay
    zdd = -n^2 z            + az
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OrbitParams:
    mean_motion: float

    def __post_init__(self):
        if not self.mean_motion > 0.0:
            raise ValueError(f"mean_motion must be positive, got {self.mean_motion}")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.mean_motion


@dataclass(frozen=True)
class RelativeState:
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        position = np.asarray(self.position, dtype=float).reshape(3)
        velocity = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(position)) and np.all(np.isfinite(velocity))):
            raise ValueError("relative state must be finite")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "velocity", velocity)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    @classmethod
    def from_vector(cls, v) -> "RelativeState":
        v = np.asarray(v, dtype=float)
        return cls(v[:3], v[3:6])


def hcw_derivative(state: RelativeState, accel, params: OrbitParams) -> RelativeState:
    """Time derivative of ``state``; the result's fields are (velocity, acceleration)."""
    return RelativeState.from_vector(hcw_rhs(state.as_vector(), accel, params.mean_motion))


def hcw_rhs(x: np.ndarray, accel, n: float) -> np.ndarray:
    a = np.zeros(3) if accel is None else np.asarray(accel, dtype=float)
    return np.array(
        [
            x[3],
            x[4],
            x[5],
            3.0 * n * n * x[0] + 2.0 * n * x[4] + a[0],
            -2.0 * n * x[3] + a[1],
            -n * n * x[2] + a[2],
        ]
    )


def rk4_step(state, dt: float, derivative: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """One classical Runge-Kutta step for an autonomous derivative ``f(x)``."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(state, dtype=float)
    k1 = _checked(derivative(x))
    k2 = _checked(derivative(x + 0.5 * dt * k1))
    k3 = _checked(derivative(x + 0.5 * dt * k2))
    k4 = _checked(derivative(x + dt * k3))
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _checked(k):
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)):
        raise PropagationError("derivative returned a non-finite value")
    return k


def propagate_hcw(state: RelativeState, dt: float, params: OrbitParams, accel=None) -> RelativeState:
    n = params.mean_motion
    x = rk4_step(state.as_vector(), dt, lambda v: hcw_rhs(v, accel, n))
    return RelativeState.from_vector(x)


def hcw_closed_form(state: RelativeState, t: float, params: OrbitParams) -> RelativeState:
    """Analytic unforced HCW solution at time ``t`` (state transition matrix)."""
    n = params.mean_motion
    x0, y0, z0 = state.position
    vx0, vy0, vz0 = state.velocity
    s, c = np.sin(n * t), np.cos(n * t)
    x = (4 - 3 * c) * x0 + s / n * vx0 + 2 / n * (1 - c) * vy0
    y = 6 * (s - n * t) * x0 + y0 - 2 / n * (1 - c) * vx0 + (4 * s - 3 * n * t) / n * vy0
    z = c * z0 + s / n * vz0
    vx = 3 * n * s * x0 + c * vx0 + 2 * s * vy0
    vy = -6 * n * (1 - c) * x0 - 2 * s * vx0 + (4 * c - 3) * vy0
    vz = -n * s * z0 + c * vz0
    return RelativeState([x, y, z], [vx, vy, vz])


def pro_state(
    params: OrbitParams,
    radial_amplitude: float,
    phase: float,
    cross_amplitude: float = 0.0,
    cross_phase: float = 0.0,
    along_offset: float = 0.0,
) -> RelativeState:
    """Initial state on a passive relative orbit (energy matched, no drift).

    x(t) = A cos(nt + a), y(t) = -2A sin(nt + a) + y0, z(t) = B cos(nt + b),
    which satisfies vy0 = -2 n x0.
    """
    n = params.mean_motion
    A, B = radial_amplitude, cross_amplitude
    position = [A * np.cos(phase), -2.0 * A * np.sin(phase) + along_offset, B * np.cos(cross_phase)]
    velocity = [-A * n * np.sin(phase), -2.0 * A * n * np.cos(phase), -B * n * np.sin(cross_phase)]
    return RelativeState(position, velocity)


def step_1dof(x: float, dx: float) -> float:
    return x + dx
