import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gigp.groups import (AlgebraVector, GroupElement, GroupId, GroupMismatchError, act, compose, exp, identity,
                         inverse, left_invariant_distance, log, random_element, so3_exp, so3_log, wrap_angle)

angles = st.floats(-20.0, 20.0, allow_nan=False)
seeds = st.integers(0, 2**31 - 1)


def rand(group, seed, n=2):
    return random_element(group, np.random.default_rng(seed), n)


# -- elements ----------------------------------------------------------------

def test_so2_angle_normalized_into_half_open_interval():
    assert GroupElement("SO2", -np.pi).data == pytest.approx(np.pi)
    assert GroupElement("SO2", 3 * np.pi).data == pytest.approx(np.pi)
    assert GroupElement("SO2", 0.5 + 2 * np.pi).data == pytest.approx(0.5)


@given(angles)
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -np.pi < w <= np.pi
    assert np.isclose(np.cos(w), np.cos(a)) and np.isclose(np.sin(w), np.sin(a))


def test_so3_drift_is_reprojected():
    R = so3_exp(np.array([0.3, -0.2, 0.9]))
    g = GroupElement("SO3", R + 1e-6)
    assert np.max(np.abs(g.data.T @ g.data - np.eye(3))) < 1e-10
    assert np.linalg.det(g.data) > 0


def test_so3_rejects_wrong_shape():
    with pytest.raises(ValueError):
        GroupElement("SO3", np.eye(2))


# -- compose / inverse / identity ----------------------------------------------

def test_so2_compose_adds_angles():
    g = compose(GroupElement("SO2", 2.5), GroupElement("SO2", 1.0))
    assert g.data == pytest.approx(wrap_angle(3.5))


def test_tn_compose_is_vector_addition():
    g = compose(GroupElement("Tn", [1, 2]), GroupElement("Tn", [3, -1]))
    assert np.array_equal(g.data, [4, 1])


def test_identities():
    assert identity("SO2").data == 0.0
    assert np.array_equal(identity("SO3").data, np.eye(3))
    assert np.array_equal(identity("Tn", 2).data, [0.0, 0.0])


def test_mismatched_groups_raise():
    with pytest.raises(GroupMismatchError):
        compose(identity("SO2"), identity("SO3"))
    with pytest.raises(GroupMismatchError):
        compose(identity("Tn", 2), identity("Tn", 3))


@pytest.mark.parametrize("seed", range(100))
def test_so3_inverse_gives_identity(seed):
    g = rand("SO3", seed)
    assert compose(g, inverse(g)).allclose(identity("SO3"), atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_so3_inverse_matches_matrix_inverse(seed):
    g = rand("SO3", seed)
    assert np.allclose(inverse(g).data, np.linalg.inv(g.data), atol=1e-12)


def test_inverse_of_so2_and_identity():
    assert inverse(GroupElement("SO2", 0.7)).data == pytest.approx(-0.7)
    assert inverse(identity("SO3")).allclose(identity("SO3"))


@settings(max_examples=50)
@given(seeds, st.sampled_from(["SO2", "SO3", "Tn"]))
def test_group_axioms(seed, group):
    rng = np.random.default_rng(seed)
    g, h, k = (random_element(group, rng, 3) for _ in range(3))
    e = identity(group, 3)
    assert compose(compose(g, h), k).allclose(compose(g, compose(h, k)), atol=1e-10)
    assert compose(g, e).allclose(g) and compose(e, g).allclose(g)
    assert compose(g, inverse(g)).allclose(e, atol=1e-10)


# -- exp / log -------------------------------------------------------------------

def test_exp_of_zero_is_identity():
    assert exp(AlgebraVector("SO2", [0.0])).allclose(identity("SO2"))
    assert exp(AlgebraVector("SO3", [0, 0, 0])).allclose(identity("SO3"))
    assert exp(AlgebraVector("Tn", [0, 0])).allclose(identity("Tn", 2))


def test_so3_exp_quarter_turn_about_z():
    g = exp(AlgebraVector("SO3", [0, 0, np.pi / 2]))
    assert np.allclose(act(g, [1, 0, 0]), [0, 1, 0], atol=1e-12)


def test_so2_half_turn_twice_returns():
    g = exp(AlgebraVector("SO2", [np.pi]))
    assert np.allclose(act(g, act(g, [1.0, 0.0])), [1, 0], atol=1e-12)


def test_log_identity_and_principal_branch():
    assert np.array_equal(log(identity("SO3")).coords, [0, 0, 0])
    assert log(GroupElement("SO2", 0.3)).coords[0] == pytest.approx(0.3)


def test_so3_log_roundtrip_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = rng.normal(size=3)
        a *= rng.uniform(0, 3) / np.linalg.norm(a)
        assert np.linalg.norm(log(exp(AlgebraVector("SO3", a))).coords - a) < 1e-9


@settings(max_examples=100)
@given(seeds)
def test_exp_log_inverse_on_group(seed):
    g = rand("SO3", seed)
    assert exp(log(g)).allclose(g, atol=1e-10)


def test_so3_log_at_pi_is_deterministic():
    for axis in ([1, 0, 0], [0, -1, 0], [0, 0, -1], [-1, 1, 0]):
        axis = np.asarray(axis, float) / np.linalg.norm(axis)
        w = so3_log(so3_exp(np.pi * axis))
        assert np.isclose(np.linalg.norm(w), np.pi)
        first = w[np.flatnonzero(np.abs(w) > 1e-9)[0]]
        assert first > 0
        assert np.allclose(so3_exp(w), so3_exp(np.pi * axis), atol=1e-10)


def test_so3_log_near_pi_roundtrip():
    axis = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
    for eps in (1e-3, 1e-6, 1e-9):
        R = so3_exp((np.pi - eps) * axis)
        assert np.allclose(so3_exp(so3_log(R)), R, atol=1e-9)


# -- act ---------------------------------------------------------------------------

def test_act_examples():
    assert np.allclose(act(GroupElement("SO2", np.pi / 2), [1, 0]), [0, 1], atol=1e-12)
    assert np.allclose(act(GroupElement("Tn", [1, 1]), [2, 3]), [3, 4])


def test_act_dimension_mismatch():
    with pytest.raises(ValueError):
        act(identity("SO3"), [1.0, 2.0])


@pytest.mark.parametrize("group", ["SO2", "SO3"])
def test_act_preserves_norm(group):
    rng = np.random.default_rng(1)
    n = 2 if group == "SO2" else 3
    for _ in range(100):
        g = random_element(group, rng)
        x = rng.normal(size=n)
        assert np.linalg.norm(act(g, x)) == pytest.approx(np.linalg.norm(x), abs=1e-12)


@settings(max_examples=50)
@given(seeds, st.sampled_from(["SO2", "SO3"]))
def test_act_is_homomorphism(seed, group):
    rng = np.random.default_rng(seed)
    g, h = random_element(group, rng), random_element(group, rng)
    x = rng.normal(size=(5, g.dim))
    assert np.allclose(act(compose(g, h), x), act(g, act(h, x)), atol=1e-10)
    assert np.allclose(act(identity(group), x), x)


# -- distance ----------------------------------------------------------------------

def test_distance_examples():
    u = GroupElement("SO2", 0.0)
    assert left_invariant_distance(u, u) == 0.0
    assert left_invariant_distance(u, GroupElement("SO2", 0.5)) == pytest.approx(0.5)


@pytest.mark.parametrize("group", ["SO2", "SO3"])
def test_distance_left_invariant_and_symmetric(group):
    rng = np.random.default_rng(2)
    for _ in range(100):
        g, u, v = (random_element(group, rng) for _ in range(3))
        d = left_invariant_distance(u, v)
        assert left_invariant_distance(g @ u, g @ v) == pytest.approx(d, abs=1e-12)
        assert left_invariant_distance(v, u) == pytest.approx(d, abs=1e-12)


def test_group_id_parse():
    assert GroupId.parse("so3") is GroupId.SO3
    assert GroupId.parse("Tn") is GroupId.TN
    with pytest.raises(ValueError):
        GroupId.parse("SE3")
