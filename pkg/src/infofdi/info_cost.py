"""Variance fusion, the global information cost and its per-agent split.

For every POI the fused variance is the inverse of the summed information
(prior, accumulated and current observations).  With
``psi = H_POI**2`` the weighted cost splits exactly into a prior term plus
one additive share per observer::

    H = sum_s phi psi (w^-1 + A) + sum_i sum_s phi psi sigma_i^-1
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    Pose,
    PoiField,
    SensorModel,
    SingularGeometryError,
    inverse_variances,
    unit,
    visible_mask,
)


@dataclass
class CostBreakdown:
    global_cost: float
    prior_term: float
    agent_contributions: dict
    per_poi_cost: np.ndarray

    @property
    def contributions(self) -> np.ndarray:
        return np.array(list(self.agent_contributions.values()))


def _observed_information(prior_variance: float, inverse_variances) -> float:
    if not prior_variance > 0.0:
        raise ValueError(f"prior variance must be positive, got {prior_variance}")
    inv = np.asarray(inverse_variances, dtype=float).reshape(-1)
    if np.any(inv < 0.0) or not np.all(np.isfinite(inv)):
        raise ValueError("inverse variances must be finite and non-negative")
    info = float(np.sum(inv))
    if np.isinf(prior_variance) and info == 0.0:
        raise ValueError("improper prior with no observations has undefined variance")
    return info


def fuse_poi(prior_variance: float, inverse_variances=()) -> float:
    """``(w^-1 + sum sigma^-1)^-1``, written as ``w / (1 + w sum)`` so it never exceeds ``w``."""
    info = _observed_information(prior_variance, inverse_variances)
    if np.isinf(prior_variance):
        return 1.0 / info
    return prior_variance / (1.0 + prior_variance * info)


def consensus_factor(prior_variance: float, inverse_variances=()) -> float:
    h = fuse_poi(prior_variance, inverse_variances)
    return h * h


def inverse_variance_matrix(
    pois: PoiField,
    agents: Sequence[tuple[Pose, SensorModel]],
    target_center,
    assignment: np.ndarray | None = None,
) -> np.ndarray:
    """(N, M) matrix of per-agent inverse variances (degradation applied).

    ``assignment`` is an optional boolean (N, M) mask of which POIs each
    agent reports on.
    """
    rows = []
    for i, (pose, sensor) in enumerate(agents):
        cand = None if assignment is None else assignment[i]
        rows.append(inverse_variances(pose, pois.locations, sensor, target_center, cand))
    if not rows:
        return np.zeros((0, len(pois)))
    return np.vstack(rows)


def decompose(pois: PoiField, inv: np.ndarray, agent_ids: Sequence | None = None) -> CostBreakdown:
    """Cost breakdown from a precomputed inverse-variance matrix."""
    inv = np.atleast_2d(inv) if len(inv) else np.zeros((0, len(pois)))
    base = pois.prior_information + pois.accumulated
    total = base + inv.sum(axis=0)
    if np.any(total <= 0.0):
        raise ValueError("improper prior with no observations has undefined variance")
    h_poi = 1.0 / total
    weight = pois.importance * h_poi * h_poi
    if agent_ids is None:
        agent_ids = range(len(inv))
    per_poi = pois.importance * h_poi
    return CostBreakdown(
        global_cost=float(np.sum(per_poi)),
        prior_term=float(np.sum(weight * base)),
        agent_contributions={a: float(np.sum(weight * row)) for a, row in zip(agent_ids, inv)},
        per_poi_cost=per_poi,
    )


def evaluate_cost(
    pois: PoiField,
    agents: Sequence[tuple[Pose, SensorModel]],
    target_center,
    assignment: np.ndarray | None = None,
    agent_ids: Sequence | None = None,
) -> CostBreakdown:
    if len(pois) == 0:
        raise ValueError("need at least one POI")
    inv = inverse_variance_matrix(pois, agents, target_center, assignment)
    return decompose(pois, inv, agent_ids)


def gradient_1dof(
    x: float,
    other_inverse_info,
    poi_xy,
    variance_gain: float,
    importance,
    prior_variance,
) -> float:
    """Derivative of the planar cost with respect to one agent's abscissa.

    The agent sits at ``(x, 0)``; ``poi_xy`` is an (M, 2) array of POI
    coordinates and ``other_inverse_info`` the information every POI
    already receives from the remaining agents.
    """
    poi_xy = np.atleast_2d(np.asarray(poi_xy, dtype=float))
    dx = x - poi_xy[:, 0]
    d2 = dx * dx + poi_xy[:, 1] ** 2
    if np.any(d2 == 0.0):
        raise SingularGeometryError("agent coincides with a POI")
    own = 1.0 / (variance_gain * d2)
    total = (
        1.0 / np.broadcast_to(np.asarray(prior_variance, dtype=float), dx.shape)
        + np.asarray(other_inverse_info, dtype=float)
        + own
    )
    h_poi = 1.0 / total
    phi = np.broadcast_to(np.asarray(importance, dtype=float), dx.shape)
    return float(np.sum(phi * (2.0 / variance_gain) * h_poi**2 * dx / d2**2))


def pointing_policy(
    agent: Pose,
    pois: PoiField,
    sensor: SensorModel,
    target_center,
    candidates: np.ndarray | None = None,
) -> tuple[np.ndarray, bool]:
    """Aim at the facing POI with the largest current fused variance.

    Returns ``(direction, found)``.  Ties go to the lowest POI id.  When no
    candidate POI faces the agent the previous pointing is returned with
    ``found=False``.
    """
    center = np.asarray(target_center, dtype=float)
    rel = pois.locations - center
    facing = np.einsum("ij,ij->i", rel, agent.position - pois.locations) > 0.0
    if candidates is not None:
        facing &= candidates
    if not facing.any():
        return agent.pointing.copy(), False
    var = np.where(facing, pois.fused_variance(), -np.inf)
    best = int(np.argmax(var))
    return unit(rel[best]), True


def add_information(pois: PoiField, inv: np.ndarray, dt: float, rate_scale: float = 1.0) -> PoiField:
    """Add ``dt * rate_scale`` worth of observed information, in place."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    inv = np.atleast_2d(inv)
    if len(inv):
        pois.accumulated += inv.sum(axis=0) * (dt * rate_scale)
    return pois


def accumulate_observations(
    pois: PoiField,
    agents: Sequence[tuple[Pose, SensorModel]],
    target_center,
    dt: float,
    rate_scale: float = 1.0,
) -> PoiField:
    """Credit every POI with the information its current observers provide."""
    inv = inverse_variance_matrix(pois, agents, target_center)
    return add_information(pois, inv, dt, rate_scale)


def visible_set(pose: Pose, pois: PoiField, sensor: SensorModel, target_center, candidates=None) -> np.ndarray:
    mask = visible_mask(pose, pois.locations, sensor, target_center)
    if candidates is not None:
        mask &= candidates
    return mask
