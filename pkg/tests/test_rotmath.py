import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from motionaug import rotmath as rm
from oracles import geodesic_deg as geo_oracle, rot_x, rot_y, rot_z

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
six_vectors = arrays(np.float64, 6, elements=finite)


def assert_rotation(R, tol=1e-12):
    assert np.abs(R.T @ R - np.eye(3)).max() < tol
    assert abs(np.linalg.det(R) - 1.0) < tol


def test_sixd_identity_and_quarter_turn():
    np.testing.assert_array_equal(rm.sixd_to_rot([1, 0, 0, 0, 1, 0]), np.eye(3))
    np.testing.assert_allclose(rm.sixd_to_rot([0, 1, 0, -1, 0, 0]), rot_z(np.pi / 2), atol=1e-15)


def test_sixd_skewed_input_is_orthonormalized():
    R = rm.sixd_to_rot([1.1, 0.01, 0, 0.2, 0.9, 0])
    assert_rotation(R)


@pytest.mark.parametrize("bad", [[0, 0, 0, 0, 1, 0], [1, 0, 0, 2, 0, 0], [1, 0, 0, 0, 0, 0], [np.nan, 0, 0, 0, 1, 0]])
def test_sixd_degenerate_raises(bad):
    with pytest.raises(rm.DegenerateRotationError):
        rm.sixd_to_rot(bad)


def test_rot_to_sixd_examples():
    np.testing.assert_array_equal(rm.rot_to_sixd(np.eye(3)), [1, 0, 0, 0, 1, 0])
    np.testing.assert_allclose(rm.rot_to_sixd(rot_z(np.pi / 2)), [0, 1, 0, -1, 0, 0], atol=1e-15)


def test_renormalize_examples():
    r = rm.rot_to_sixd(rot_x(0.3) @ rot_y(-1.0))
    np.testing.assert_allclose(rm.renormalize_sixd(r), r, atol=1e-12)
    np.testing.assert_allclose(rm.renormalize_sixd([2, 0, 0, 0, 3, 0]), [1, 0, 0, 0, 1, 0])


def test_renormalize_random_perturbed():
    rng = np.random.default_rng(0)
    r = rm.rot_to_sixd(rm.random_rotations(rng, 50)) + rng.normal(0, 0.05, (50, 6))
    for R in rm.sixd_to_rot(rm.renormalize_sixd(r)):
        assert_rotation(R)


def test_euler_examples():
    np.testing.assert_array_equal(rm.euler_to_rot([0, 0, 0]), np.eye(3))
    R = rm.euler_to_rot([np.pi / 2, 0, 0])
    np.testing.assert_allclose(R @ [0, 1, 0], [0, 0, 1], atol=1e-15)
    e = np.array([0.3, -0.7, 1.2])
    np.testing.assert_allclose(rm.euler_to_rot(e), rot_x(e[0]) @ rot_y(e[1]) @ rot_z(e[2]), atol=1e-15)


def test_euler_gimbal_lock_flag():
    R = rm.euler_to_rot([0.4, np.pi / 2, 0.3])
    e, flag = rm.rot_to_euler(R, return_flags=True)
    assert flag and e[2] == 0.0
    np.testing.assert_allclose(rm.euler_to_rot(e), R, atol=1e-9)


def test_geodesic_examples():
    R = rm.euler_to_rot([0.1, 0.2, 0.3])
    assert rm.geodesic_deg(R, R) == pytest.approx(0.0, abs=1e-6)
    assert rm.geodesic_deg(np.eye(3), rot_z(np.pi / 2)) == pytest.approx(90.0, abs=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(20):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        assert rm.geodesic_deg(np.eye(3), rm.axis_angle_to_rot(0.3 * axis)) == pytest.approx(np.degrees(0.3), abs=1e-9)


def test_quaternion_round_trip():
    rng = np.random.default_rng(2)
    R = rm.random_rotations(rng, 100)
    np.testing.assert_allclose(rm.quat_to_rot(rm.rot_to_quat(R)), R, atol=1e-12)


def test_chordal_mean_of_copies():
    R = rm.euler_to_rot([0.5, -0.2, 1.0])
    np.testing.assert_allclose(rm.chordal_mean(np.stack([R, R, R])), R, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(six_vectors)
def test_property_sixd_always_rotation(r):
    a1, a2 = r[:3], r[3:]
    assume(np.linalg.norm(a1) > 1e-3)
    assume(np.linalg.norm(np.cross(a1, a2)) > 1e-3 * max(1.0, np.linalg.norm(a2)))
    assert_rotation(rm.sixd_to_rot(r), tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(six_vectors, st.floats(1e-3, 1e3))
def test_property_renormalize_idempotent_and_scale_invariant(r, s):
    a1, a2 = r[:3], r[3:]
    assume(np.linalg.norm(a1) > 1e-3)
    assume(np.linalg.norm(np.cross(a1, a2)) > 1e-3 * max(1.0, np.linalg.norm(a2)))
    once = rm.renormalize_sixd(r)
    np.testing.assert_allclose(rm.renormalize_sixd(once), once, atol=1e-12)
    scaled = np.concatenate([s * a1, a2])
    np.testing.assert_allclose(rm.renormalize_sixd(scaled), once, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_geodesic_symmetric_and_triangle(seed):
    rng = np.random.default_rng(seed)
    A, B, C = rm.random_rotations(rng, 3)
    ab, ba = rm.geodesic_deg(A, B), rm.geodesic_deg(B, A)
    assert abs(ab - ba) < 1e-9
    assert abs(ab - geo_oracle(A, B)) < 1e-6
    assert rm.geodesic_deg(A, C) <= ab + rm.geodesic_deg(B, C) + 1e-9


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 3, elements=st.floats(-3, 3)))
def test_property_euler_round_trip(e):
    e = e.copy()
    assume(abs(np.cos(e[1])) > 1e-3)
    assume(abs(e[1]) < np.pi / 2)
    R = rm.euler_to_rot(e)
    back, flag = rm.rot_to_euler(R, return_flags=True)
    assert not flag
    np.testing.assert_allclose(rm.euler_to_rot(back), R, atol=1e-9)
