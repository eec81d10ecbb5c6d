import numpy as np
import pytest
from hypothesis import given, strategies as st

from infofdi.analytic import fixture_pois, planar_inverse_variances
from infofdi.geometry import PoiField, Pose, SensorModel, sample_sphere_pois
from infofdi.info_cost import (
    accumulate_observations,
    add_information,
    consensus_factor,
    decompose,
    evaluate_cost,
    fuse_poi,
    gradient_1dof,
    inverse_variance_matrix,
    pointing_policy,
    visible_set,
)

CENTER = np.zeros(3)
SENSOR = SensorModel(np.deg2rad(20.0))

variances = st.floats(1e-3, 1e3)
infos = st.lists(st.floats(0.0, 1e3), max_size=8)


def test_fuse_without_observers_returns_prior():
    assert fuse_poi(5.0) == 5.0
    assert consensus_factor(5.0) == 25.0


def test_fuse_equal_information_halves():
    assert fuse_poi(2.0, [0.5]) == 1.0
    assert consensus_factor(2.0, [0.5]) == 1.0


def test_fuse_planar_fixture_by_hand():
    expected = 1.0 / (1.0 / 7.25 + 1.0 / 1.25)
    assert fuse_poi(np.inf, [1 / 7.25, 1 / 1.25]) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(1.06618, abs=1e-5)


def test_fuse_rejects_invalid():
    with pytest.raises(ValueError):
        fuse_poi(0.0)
    with pytest.raises(ValueError):
        fuse_poi(1.0, [-0.1])
    with pytest.raises(ValueError):
        fuse_poi(np.inf, [])


@given(variances, infos)
def test_fused_variance_bounded_by_prior(w, inv):
    h = fuse_poi(w, inv)
    assert 0.0 < h <= w


@given(variances, infos, st.floats(0.0, 1e3))
def test_extra_observer_never_increases_variance(w, inv, extra):
    assert fuse_poi(w, inv + [extra]) <= fuse_poi(w, inv)


@given(variances, infos)
def test_consensus_is_square_of_fused_variance(w, inv):
    h = fuse_poi(w, inv)
    assert consensus_factor(w, inv) == pytest.approx(h * h, rel=1e-14)


def _random_problem(rng, n_agents, n_pois):
    pois = PoiField(
        sample_sphere_pois(n_pois, 1.0, int(rng.integers(2**31))).locations,
        rng.random(n_pois),
        rng.uniform(0.1, 10.0, n_pois),
        rng.uniform(0.0, 5.0, n_pois),
    )
    inv = rng.uniform(0.0, 1.0, (n_agents, n_pois)) * (rng.random((n_agents, n_pois)) < 0.3)
    return pois, inv


@given(st.integers(0, 2**31 - 1), st.integers(0, 8), st.integers(1, 300))
def test_decomposition_identity(seed, n_agents, n_pois):
    pois, inv = _random_problem(np.random.default_rng(seed), n_agents, n_pois)
    b = decompose(pois, inv)
    total = b.prior_term + sum(b.agent_contributions.values())
    assert total == pytest.approx(b.global_cost, rel=1e-12)


def test_no_visibility_means_prior_cost_and_zero_shares():
    pois = sample_sphere_pois(50, 1.0, 3)
    pois.accumulated[:] = 1.5
    agent = (Pose([0, 0, 5.0], [0, 0, -1.0]), SENSOR)  # looking at the far side
    b = evaluate_cost(pois, [agent], CENTER)
    assert b.agent_contributions[0] == 0.0
    assert b.global_cost == pytest.approx(np.sum(pois.importance / (1.0 + 1.5)), rel=1e-14)


def test_planar_fixture_symmetry():
    pois = fixture_pois(1.0, 0.5, 0.0)
    inv = planar_inverse_variances(pois, [-1.5, 1.5], 1.0)
    b = decompose(pois, inv)
    h = b.per_poi_cost / pois.importance
    assert h[0] == pytest.approx(h[1], rel=1e-15)
    assert b.global_cost == pytest.approx(0.5 * h[0] + 0.5 * h[1], rel=1e-15)


def test_duplicate_agent_strictly_lowers_cost():
    pois = sample_sphere_pois(200, 1.0, 11)
    agent = (Pose.looking([0, 0, 5.0], [0, 0, 1.0]), SENSOR)
    one = evaluate_cost(pois, [agent], CENTER)
    two = evaluate_cost(pois, [agent, agent], CENTER)
    assert one.agent_contributions[0] > 0.0
    assert two.global_cost < one.global_cost


def _planar_cost(xs, k=1.0, a=1.0, phi=0.5, w_inv=0.0):
    pois = fixture_pois(a, phi, w_inv)
    return decompose(pois, planar_inverse_variances(pois, xs, k)).global_cost


def _gradient(xs, i, k=1.0, a=1.0, phi=0.5, w_inv=0.0):
    pois = fixture_pois(a, phi, w_inv)
    inv = planar_inverse_variances(pois, xs, k)
    others = inv.sum(axis=0) - inv[i]
    return gradient_1dof(xs[i], others, pois.locations[:, :2], k, pois.importance, pois.prior_variance)


def test_gradient_symmetry_of_planar_fixture():
    g1 = _gradient([-1.5, 1.5], 0)
    g2 = _gradient([-1.5, 1.5], 1)
    assert g1 == pytest.approx(-g2, rel=1e-14)


def test_gradient_of_poi_abeam_vanishes():
    g = gradient_1dof(0.7, [0.0], [[0.7, 2.0]], 1.0, 1.0, np.inf)
    assert g == 0.0


@given(
    st.floats(-3.0, 3.0),
    st.floats(-3.0, 3.0),
    st.floats(0.5, 2.0),
    st.floats(0.2, 3.0),
    st.floats(0.0, 2.0),
)
def test_gradient_matches_central_difference(x1, x2, k, a, w_inv):
    xs = [x1, x2]
    h = 1e-5
    fd = (_planar_cost([x1 + h, x2], k, a, 0.5, w_inv) - _planar_cost([x1 - h, x2], k, a, 0.5, w_inv)) / (2 * h)
    g = _gradient(xs, 0, k, a, 0.5, w_inv)
    assert g == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_pointing_single_facing_poi():
    pois = PoiField([[0.0, 0.0, 1.0]], 1.0, 1.0)
    aim, found = pointing_policy(Pose([0, 0, 5.0], [1.0, 0, 0]), pois, SENSOR, CENTER)
    assert found and np.allclose(aim, [0, 0, 1.0])


def test_pointing_prefers_larger_variance_and_lowest_id_on_ties():
    locs = [[0.6, 0.0, 0.8], [0.0, 0.6, 0.8], [-0.6, 0.0, 0.8]]
    pose = Pose([0, 0, 5.0], [0, 0, 1.0])
    pois = PoiField(locs, 1.0, [2.0, 3.0, 3.0])
    aim, _ = pointing_policy(pose, pois, SENSOR, CENTER)
    assert np.allclose(aim, locs[1])
    tied = PoiField(locs, 1.0, 1.0)
    aim, _ = pointing_policy(pose, tied, SENSOR, CENTER)
    assert np.allclose(aim, locs[0])


def test_pointing_without_facing_candidates_keeps_previous():
    pois = PoiField([[0.0, 0.0, -1.0]], 1.0, 1.0)
    prev = np.array([0.0, 1.0, 0.0])
    aim, found = pointing_policy(Pose([0, 0, 5.0], prev), pois, SENSOR, CENTER)
    assert not found and np.array_equal(aim, prev)


def test_add_information_rules():
    pois = PoiField([[1.0, 0, 0]], 1.0, 1.0)
    add_information(pois, np.array([[0.5]]), 1.0)
    assert pois.accumulated[0] == 0.5
    add_information(pois, np.array([[0.5], [0.5]]), 1.0)
    assert pois.accumulated[0] == 1.5
    add_information(pois, np.zeros((1, 1)), 1.0)
    assert pois.accumulated[0] == 1.5
    with pytest.raises(ValueError):
        add_information(pois, np.zeros((1, 1)), 0.0)


def test_accumulate_observations_matches_matrix():
    pois = sample_sphere_pois(100, 1.0, 5)
    agents = [(Pose.looking([0, 0, 4.0], [0, 0, 1.0]), SENSOR), (Pose.looking([4.0, 0, 0], [1.0, 0, 0]), SENSOR)]
    inv = inverse_variance_matrix(pois, agents, CENTER)
    ref = pois.accumulated + inv.sum(axis=0) * 2.0
    accumulate_observations(pois, agents, CENTER, 2.0)
    assert np.array_equal(pois.accumulated, ref)
    assert np.array_equal(visible_set(agents[0][0], pois, SENSOR, CENTER), inv[0] > 0)
