"""Observer poses, points of interest and the conical visibility / variance model.

The field of view is a cone whose apex sits at the target center and whose
axis is the observer's pointing direction.  A POI is visible when it lies
inside that cone (inclusive boundary) and its outward surface normal faces
the observer.  Visible POIs are observed with variance ``k * dist**2``;
everything else carries infinite variance, i.e. zero information.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

# Slack on the inclusive cone boundary, absorbs round-off in cos(angle).
BOUNDARY_TOL = 1e-12
UNIT_TOL = 1e-12


class SingularGeometryError(ValueError):
    """Raised when an observer coincides with an observed POI."""


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError(f"cannot normalize vector {v!r}")
    return v / n


def rotate_about(v, axis, angle: float) -> np.ndarray:
    """Rodrigues rotation of ``v`` by ``angle`` radians about ``axis``."""
    v = np.asarray(v, dtype=float)
    k = unit(axis)
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(k, v) * s + k * np.dot(k, v) * (1.0 - c)


def perpendicular(v) -> np.ndarray:
    """A deterministic unit vector perpendicular to ``v``."""
    v = unit(v)
    ref = np.array([0.0, 0.0, 1.0]) if abs(v[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    return unit(np.cross(v, ref))


@dataclass(frozen=True)
class Pose:
    """Observer position (LVLH, meters) and unit pointing direction."""

    position: np.ndarray
    pointing: np.ndarray

    def __post_init__(self):
        position = np.asarray(self.position, dtype=float).reshape(3)
        pointing = np.asarray(self.pointing, dtype=float).reshape(3)
        if abs(np.linalg.norm(pointing) - 1.0) > UNIT_TOL:
            raise ValueError("pointing must be a unit vector")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "pointing", pointing)

    @classmethod
    def looking(cls, position, direction) -> "Pose":
        return cls(position, unit(direction))


@dataclass(frozen=True)
class SensorModel:
    half_angle: float
    variance_gain: float = 1.0
    degradation: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.half_angle < np.pi:
            raise ValueError(f"half_angle must lie in (0, pi), got {self.half_angle}")
        if not self.variance_gain > 0.0:
            raise ValueError(f"variance_gain must be positive, got {self.variance_gain}")
        if not 0.0 < self.degradation <= 1.0:
            raise ValueError(f"degradation must lie in (0, 1], got {self.degradation}")

    def degraded(self, beta: float) -> "SensorModel":
        return replace(self, degradation=beta)


@dataclass
class PointOfInterest:
    location: np.ndarray
    importance: float = 1.0
    prior_variance: float = 1.0
    accumulated_information: float = 0.0

    def __post_init__(self):
        self.location = np.asarray(self.location, dtype=float).reshape(-1)
        _check_poi_values(self.importance, self.prior_variance, self.accumulated_information)


def _check_poi_values(importance, prior_variance, accumulated):
    importance = np.asarray(importance)
    if np.any(importance < 0.0) or np.any(importance > 1.0):
        raise ValueError("importance must lie in [0, 1]")
    if np.any(~(np.asarray(prior_variance) > 0.0)):
        raise ValueError("prior_variance must be positive")
    if np.any(~(np.asarray(accumulated) >= 0.0)):
        raise ValueError("accumulated_information must be non-negative")


@dataclass
class PoiField:
    """Column store for a set of POIs; the POI id is its row index.

    ``prior_variance`` may be ``inf`` to express an improper prior (zero
    prior information).
    """

    locations: np.ndarray
    importance: np.ndarray
    prior_variance: np.ndarray
    accumulated: np.ndarray = field(default=None)

    def __post_init__(self):
        self.locations = np.atleast_2d(np.asarray(self.locations, dtype=float))
        m = len(self.locations)
        self.importance = np.broadcast_to(np.asarray(self.importance, dtype=float), (m,)).copy()
        self.prior_variance = np.broadcast_to(
            np.asarray(self.prior_variance, dtype=float), (m,)
        ).copy()
        if self.accumulated is None:
            self.accumulated = np.zeros(m)
        else:
            self.accumulated = np.asarray(self.accumulated, dtype=float).copy()
        if m == 0:
            raise ValueError("a POI field needs at least one point")
        _check_poi_values(self.importance, self.prior_variance, self.accumulated)

    @classmethod
    def from_points(cls, points: Sequence[PointOfInterest]) -> "PoiField":
        return cls(
            locations=np.array([p.location for p in points]),
            importance=np.array([p.importance for p in points]),
            prior_variance=np.array([p.prior_variance for p in points]),
            accumulated=np.array([p.accumulated_information for p in points]),
        )

    def __len__(self) -> int:
        return len(self.locations)

    def __getitem__(self, i: int) -> PointOfInterest:
        return PointOfInterest(
            self.locations[i].copy(),
            float(self.importance[i]),
            float(self.prior_variance[i]),
            float(self.accumulated[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def copy(self) -> "PoiField":
        return PoiField(self.locations, self.importance, self.prior_variance, self.accumulated)

    def with_accumulated(self, accumulated: np.ndarray) -> "PoiField":
        """Shallow copy sharing geometry and priors but with other accumulated information."""
        out = copy.copy(self)
        out.accumulated = accumulated
        return out

    @property
    def prior_information(self) -> np.ndarray:
        return 1.0 / self.prior_variance

    def fused_variance(self) -> np.ndarray:
        """Current variance from the prior and the accumulated information."""
        with np.errstate(divide="ignore"):
            return 1.0 / (self.prior_information + self.accumulated)


def sample_sphere_pois(
    count: int,
    radius: float,
    seed: int,
    center=(0.0, 0.0, 0.0),
    prior_variance: float = 1.0,
    importance: float = 1.0,
) -> PoiField:
    """Uniform POIs on a sphere via normalized standard-normal draws."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return PoiField(
        locations=np.asarray(center, dtype=float) + radius * g,
        importance=importance,
        prior_variance=prior_variance,
    )


def visible_mask(pose: Pose, locations, sensor: SensorModel, target_center) -> np.ndarray:
    """Vectorized visibility of ``locations`` (M, 3) from ``pose``."""
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    rel = locations - np.asarray(target_center, dtype=float)
    norms = np.linalg.norm(rel, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_angle = rel @ pose.pointing / norms
        facing = np.einsum("ij,ij->i", rel, pose.position - locations) / norms
    in_cone = cos_angle >= np.cos(sensor.half_angle) - BOUNDARY_TOL
    return in_cone & (facing > 0.0)


def visible(pose: Pose, poi: PointOfInterest, sensor: SensorModel, target_center) -> bool:
    return bool(visible_mask(pose, poi.location[None, :], sensor, target_center)[0])


def sensor_variance(
    pose: Pose,
    poi: PointOfInterest,
    sensor: SensorModel,
    target_center,
    check_visibility: bool = True,
) -> float:
    """Observation variance ``k * dist**2``; ``inf`` when the POI is not visible.

    With ``check_visibility=False`` every POI counts as visible (used by the
    planar analytic fixture, which has no target body).
    """
    if check_visibility and not visible(pose, poi, sensor, target_center):
        return np.inf
    d2 = float(np.sum((pose.position - poi.location) ** 2))
    if d2 == 0.0:
        raise SingularGeometryError("observer coincides with the POI")
    return sensor.variance_gain * d2


def inverse_variance(
    pose: Pose,
    poi: PointOfInterest,
    sensor: SensorModel,
    target_center,
    check_visibility: bool = True,
) -> float:
    """Information ``degradation / sigma``; exactly 0 for non-visible POIs."""
    sigma = sensor_variance(pose, poi, sensor, target_center, check_visibility)
    if np.isinf(sigma):
        return 0.0
    return sensor.degradation / sigma


def inverse_variances(
    pose: Pose,
    locations,
    sensor: SensorModel,
    target_center,
    candidates: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized inverse variances over ``locations``.

    ``candidates`` optionally masks which POIs this observer reports on;
    masked-out POIs get exactly zero information.
    """
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    out = np.zeros(len(locations))
    idx = None if candidates is None else np.flatnonzero(candidates)
    sub = locations if idx is None else locations[idx]
    if not len(sub):
        return out
    mask = visible_mask(pose, sub, sensor, target_center)
    if not mask.any():
        return out
    d2 = np.sum((sub[mask] - pose.position) ** 2, axis=1)
    if np.any(d2 == 0.0):
        raise SingularGeometryError("observer coincides with a visible POI")
    vals = sensor.degradation / (sensor.variance_gain * d2)
    if idx is None:
        out[mask] = vals
    else:
        out[idx[mask]] = vals
    return out


def visible_ids(mask: Iterable[bool]) -> frozenset:
    return frozenset(np.flatnonzero(np.asarray(mask)).tolist())
