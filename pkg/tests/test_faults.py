import numpy as np
import pytest
from hypothesis import given, strategies as st

from infofdi import faults as F
from infofdi.dynamics import RelativeState
from infofdi.fdi import AgentWindowRecord, ratio
from infofdi.geometry import Pose, SensorModel, inverse_variances, sample_sphere_pois, unit
from infofdi.info_cost import fuse_poi

RNG = np.random.default_rng(0)


def test_one_dof_over_actuation():
    spec = F.FaultSpec("1", F.ACTUATOR_STATE, channel="step", bias=0.05)
    assert F.inject_actuator_state(0.1, spec, 0.0, RNG) == pytest.approx(0.15, abs=1e-15)


def test_identity_actuator_fault():
    s = RelativeState([1, 2, 3], [0.1, 0.2, 0.3])
    out = F.inject_actuator_state(s, F.FaultSpec("a", F.ACTUATOR_STATE), 5.0, RNG)
    assert np.array_equal(out.as_vector(), s.as_vector())


def test_actuator_inactive_before_start():
    s = RelativeState([1, 0, 0], [0, 0, 0])
    spec = F.FaultSpec("a", F.ACTUATOR_STATE, start_time=10.0, bias=1.0)
    assert F.inject_actuator_state(s, spec, 9.0, RNG) is s
    out = F.inject_actuator_state(s, spec, 10.0, RNG)
    assert np.array_equal(out.velocity, [1.0, 0.0, 0.0])


def test_actuator_bias_channels_and_directions():
    s = RelativeState([0, 3, 4], [0, 0, 0])
    radial = F.inject_actuator_state(s, F.FaultSpec("a", F.ACTUATOR_STATE, bias=-5.0, channel="position"), 0, RNG)
    assert np.allclose(radial.position, [0, 0, 0])
    along = F.inject_actuator_state(s, F.FaultSpec("a", F.ACTUATOR_STATE, bias=2.0, direction=[0, 1, 0]), 0, RNG)
    assert np.allclose(along.velocity, [0, 2, 0])
    vec = F.inject_actuator_state(s, F.FaultSpec("a", F.ACTUATOR_STATE, bias=[1, 2, 3]), 0, RNG)
    assert np.allclose(vec.velocity, [1, 2, 3])


def test_actuator_noise_mean_within_clt_bound():
    std, bias = 0.3, 0.7
    spec = F.FaultSpec("a", F.ACTUATOR_STATE, channel="step", bias=bias, noise_std=std)
    rng = F.fault_stream(123, spec)
    draws = np.array([F.inject_actuator_state(0.0, spec, 0.0, rng) for _ in range(10_000)])
    assert abs(draws.mean() - bias) < 4 * std / 100


def test_zero_angle_and_antipodal_pointing():
    p = unit([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        F.FaultSpec("a", F.ACTUATOR_POINTING, angle_deg=0.0)
    flipped = F.inject_pointing_misalignment(p, F.FaultSpec("a", F.ACTUATOR_POINTING, angle_deg=180.0), RNG)
    assert np.allclose(flipped, -p)
    blackout = F.FaultSpec("a", F.SENSOR_BLACKOUT)
    assert blackout.misalignment_deg == 180.0
    assert np.allclose(F.inject_pointing_misalignment(p, blackout, RNG), -p)


@given(st.floats(0.1, 179.0), st.sampled_from([None, "random", (0.0, 0.0, 1.0)]), st.integers(0, 1000))
def test_misalignment_angle_is_exact(angle, axis, seed):
    p = unit([0.3, -0.2, 0.9])
    spec = F.FaultSpec("a", F.ACTUATOR_POINTING, angle_deg=angle, axis=axis)
    out = F.inject_pointing_misalignment(p, spec, np.random.default_rng(seed))
    got = np.rad2deg(np.arccos(np.clip(np.dot(out, p), -1, 1)))
    assert got == pytest.approx(angle, abs=1e-6)


def test_large_misalignment_empties_visible_set():
    pois = sample_sphere_pois(2000, 1.0, 1)
    sensor = SensorModel(np.deg2rad(20.0))
    pos = np.array([0.0, 0.0, 5.0])
    aim = np.array([0.0, 0.0, 1.0])
    # cap of facing POIs seen from r = 5 has angular radius acos(1/5) ~ 78.5 deg
    spec = F.FaultSpec("a", F.ACTUATOR_POINTING, angle_deg=20.0 + 78.5 + 1.0)
    pointing = F.inject_pointing_misalignment(aim, spec, RNG)
    inv = inverse_variances(Pose(pos, pointing), pois.locations, sensor, np.zeros(3))
    assert np.all(inv == 0.0)
    assert np.any(inverse_variances(Pose(pos, aim), pois.locations, sensor, np.zeros(3)) > 0.0)


def test_degradation_ratio_and_information_scale():
    sensor = SensorModel(np.deg2rad(20.0))
    degraded = F.inject_sensor_degradation(sensor, F.FaultSpec("a", F.SENSOR_DEGRADATION, beta=0.5))
    assert degraded.degradation == 0.5 and degraded.half_angle == sensor.half_angle
    # single observer, improper prior: the fused variance doubles
    assert fuse_poi(np.inf, [0.5 * 0.8]) == pytest.approx(2.0 * fuse_poi(np.inf, [0.8]), rel=1e-15)
    # unchanged motion: realized change is beta times the predicted change
    rec = AgentWindowRecord("a", 1.0, 1.0 + 0.7 * 0.2, 1.2)
    assert ratio(rec) == pytest.approx(0.7, rel=1e-12)


def test_fault_spec_validation():
    with pytest.raises(ValueError):
        F.FaultSpec("a", "gremlin")
    with pytest.raises(ValueError):
        F.FaultSpec("a", F.SENSOR_DEGRADATION, beta=1.0)
    with pytest.raises(ValueError):
        F.FaultSpec("a", F.ACTUATOR_STATE, channel="torque")
    with pytest.raises(ValueError):
        F.FaultSpec("a", F.ACTUATOR_STATE, start_time=-1.0)
    with pytest.raises(ValueError):
        F.inject_sensor_degradation(SensorModel(0.3), F.FaultSpec("a", F.ACTUATOR_STATE))


def test_fault_streams_are_independent_per_agent():
    a = F.FaultSpec("a", F.ACTUATOR_STATE, noise_std=1.0)
    b = F.FaultSpec("b", F.ACTUATOR_STATE, noise_std=1.0)
    assert F.fault_stream(7, a).random() == F.fault_stream(7, a).random()
    assert F.fault_stream(7, a).random() != F.fault_stream(7, b).random()
    assert F.stable_hash("agent") == F.stable_hash("agent")
