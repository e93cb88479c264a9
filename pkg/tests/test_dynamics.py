import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionaug import rotmath as rm
from motionaug.dynamics import (
    N_DOF, DynState, JointOrderError, RigidBodyModel, backend, jdot_qdot, joint_jacobians, mass_matrix,
    nonlinear_effects, pose_to_state, state_to_pose,
)
from motionaug.motion import default_skeleton
from motionaug.motion.sequence import Pose, rest_sequence
from conftest import random_state


def test_rest_pose_state(rbm):
    pose = rest_sequence(1)[0]
    st_ = pose_to_state(rbm, pose)
    np.testing.assert_array_equal(st_.q[:3], pose.p_root)
    np.testing.assert_array_equal(st_.q[3:], 0.0)
    assert not st_.gimbal.any()


def test_pose_state_round_trip_mild_poses(rbm):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        e = rng.uniform(-3, 3, (24, 3))
        e[:, 1] = rng.uniform(-1.4, 1.4, 24)
        pose = Pose(rng.normal(size=3), rm.euler_to_rot(e))
        back = state_to_pose(rbm, pose_to_state(rbm, pose))
        worst = max(worst, rm.geodesic_deg(back.rots, pose.rots).max())
        np.testing.assert_array_equal(back.p_root, pose.p_root)
    assert worst < 1e-9


def test_velocity_by_finite_difference(rbm):
    rots = np.tile(np.eye(3), (24, 1, 1))
    a = Pose(np.zeros(3), rots.copy())
    rots[5] = rm.euler_to_rot([0.0, 0.0, 0.01])
    b = Pose(np.zeros(3), rots)
    qd = pose_to_state(rbm, b, prev=a, fps=60).qd
    k = rbm.dof_slice(5).start + 2
    assert qd[k] == pytest.approx(0.6, abs=1e-12)
    assert np.count_nonzero(qd) == 1


def test_velocity_wraps_across_pi(rbm):
    rots = np.tile(np.eye(3), (24, 1, 1))
    rots[3] = rm.euler_to_rot([np.pi - 0.005, 0, 0])
    a = Pose(np.zeros(3), rots.copy())
    rots[3] = rm.euler_to_rot([-np.pi + 0.005, 0, 0])
    qd = pose_to_state(rbm, Pose(np.zeros(3), rots), prev=a, fps=60).qd
    assert qd[rbm.dof_slice(3).start] == pytest.approx(0.6, abs=1e-9)


def test_mass_matrix_structure(rbm, skel):
    rng = np.random.default_rng(1)
    for _ in range(100):
        q, _, _ = random_state(rng)
        M = mass_matrix(rbm, q)
        assert np.abs(M - M.T).max() < 1e-12
        assert np.linalg.eigvalsh(M).min() > 0
    np.testing.assert_allclose(M[:3, :3], skel.total_mass * np.eye(3), atol=1e-12)


def test_zero_gravity_at_rest_has_no_bias():
    model = RigidBodyModel(default_skeleton(), gravity=0.0)
    q, _, _ = random_state(np.random.default_rng(2))
    np.testing.assert_allclose(model.nonlinear_effects(q, np.zeros(N_DOF)), 0.0, atol=1e-12)


def test_inverse_dynamics_with_zero_acceleration_is_bias(rbm):
    q, qd, _ = random_state(np.random.default_rng(3))
    np.testing.assert_allclose(rbm.inverse_dynamics(q, qd, np.zeros(N_DOF)), nonlinear_effects(rbm, q, qd),
                               atol=1e-12)


def test_free_fall_root_acceleration(rbm):
    q = np.zeros(N_DOF)
    q[1] = 1.0
    qdd = np.linalg.solve(mass_matrix(rbm, q), -nonlinear_effects(rbm, q, np.zeros(N_DOF)))
    np.testing.assert_allclose(qdd[:3], [0, -9.81, 0], atol=1e-9)
    np.testing.assert_allclose(qdd[3:], 0, atol=1e-9)


def test_gravity_term_is_potential_gradient(rbm):
    q, _, _ = random_state(np.random.default_rng(4))
    g = nonlinear_effects(rbm, q, np.zeros(N_DOF))
    h = 1e-6
    fd = np.array([(rbm.energy(q + h * e, np.zeros(N_DOF))[1] - rbm.energy(q - h * e, np.zeros(N_DOF))[1]) / (2 * h)
                   for e in np.eye(N_DOF)])
    assert np.abs(g - fd).max() / np.abs(fd).max() < 1e-7


def test_coriolis_term_matches_lagrangian(skel):
    model = RigidBodyModel(skel, gravity=0.0)
    q, qd, _ = random_state(np.random.default_rng(5))
    c = model.nonlinear_effects(q, qd)
    h = 1e-6
    Mdot_qd = (mass_matrix(model, q + h * qd) - mass_matrix(model, q - h * qd)) @ qd / (2 * h)
    dT = np.array([
        (qd @ mass_matrix(model, q + h * e) @ qd - qd @ mass_matrix(model, q - h * e) @ qd) / (4 * h)
        for e in np.eye(N_DOF)
    ])
    expected = Mdot_qd - dT
    assert np.abs(c - expected).max() / np.abs(expected).max() < 1e-6


def test_jacobian_zero_columns_for_other_limbs(rbm):
    J = joint_jacobians(rbm, random_state(np.random.default_rng(6))[0])
    left_wrist = list(rbm.contact_joints()).index(20)
    for other in (2, 5, 8, 11, 17, 19, 21):       # right leg and right arm
        cols = rbm.dof_slice(other)
        np.testing.assert_array_equal(J[3 * left_wrist:3 * left_wrist + 3, cols], 0.0)


def test_jdot_qdot_zero_at_rest(rbm):
    q, _, _ = random_state(np.random.default_rng(7))
    np.testing.assert_array_equal(jdot_qdot(rbm, q, np.zeros(N_DOF)), 0.0)


def test_point_velocities_equal_jacobian_product(rbm):
    q, qd, _ = random_state(np.random.default_rng(8))
    kin = rbm.kinematics(q)
    np.testing.assert_allclose(rbm.point_velocities(qd, kin), rbm.joint_jacobians(kin=kin) @ qd, atol=1e-12)


def test_backends_agree(rbm):
    rng = np.random.default_rng(9)
    previous = backend.NAME
    try:
        results = {}
        for name in ("python", "cython"):
            try:
                backend.use(name)
            except ImportError:
                pytest.skip("compiled kernels not built")
            q, qd, qdd = random_state(np.random.default_rng(9))
            kin = rbm.kinematics(q)
            results[name] = (rbm.mass_matrix(kin=kin), rbm.inverse_dynamics(q, qd, qdd, kin=kin))
        for a, b in zip(results["python"], results["cython"]):
            np.testing.assert_allclose(a, b, atol=1e-10)
    finally:
        backend.use(previous)
    del rng


def _depth_order(skel):
    depth = np.zeros(24, dtype=int)
    for j in range(1, 24):
        depth[j] = depth[skel.parents[j]] + 1
    return np.array(sorted(range(24), key=lambda j: (depth[j], -j)))


def test_joint_order_permutation_is_consistent(skel):
    base = RigidBodyModel(skel)
    perm = RigidBodyModel(skel, order=_depth_order(skel))
    rng = np.random.default_rng(10)
    e = rng.normal(0, 0.5, (24, 3))
    p = rng.normal(size=3)
    qa, qb = base.q_from(p, e), perm.q_from(p, e)
    dof_map = np.concatenate([np.arange(3)] + [np.arange(base.dof_slice(j).start, base.dof_slice(j).stop)
                                                for j in perm.order])
    np.testing.assert_array_equal(qb, qa[dof_map])
    Ma, Mb = base.mass_matrix(qa), perm.mass_matrix(qb)
    np.testing.assert_allclose(Mb, Ma[np.ix_(dof_map, dof_map)], atol=1e-10)
    pa = base.contact_points(base.kinematics(qa)).reshape(23, 3)
    pb = perm.contact_points(perm.kinematics(qb)).reshape(23, 3)
    rows = [list(base.contact_joints()).index(j) for j in perm.contact_joints()]
    np.testing.assert_allclose(pb, pa[rows], atol=1e-12)


@pytest.mark.parametrize("order", [list(range(1, 24)) + [0], [0, 4] + [j for j in range(1, 24) if j != 4]])
def test_invalid_joint_orders(skel, order):
    with pytest.raises(JointOrderError):
        RigidBodyModel(skel, order=order)


def test_free_fall_energy_is_conserved(rbm):
    rng = np.random.default_rng(11)
    q = rbm.q_from([0, 1.0, 0], rng.normal(0, 0.3, (24, 3)))
    qd = rng.normal(0, 0.5, N_DOF)
    dt = 1.0 / 600.0
    e0 = sum(rbm.energy(q, qd))
    drift = 0.0
    for _ in range(300):
        kin = rbm.kinematics(q)
        qdd = np.linalg.solve(rbm.mass_matrix(kin=kin), -rbm.nonlinear_effects(q, qd, kin=kin))
        qd = qd + dt * qdd
        q = q + dt * qd
        drift = max(drift, abs(sum(rbm.energy(q, qd)) - e0))
    assert drift / abs(e0) < 0.01


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_inverse_dynamics_identity(seed):
    model = RigidBodyModel(default_skeleton())
    q, qd, qdd = random_state(np.random.default_rng(seed))
    kin = model.kinematics(q)
    tau = model.inverse_dynamics(q, qd, qdd, kin=kin)
    rhs = model.mass_matrix(kin=kin) @ qdd + model.nonlinear_effects(q, qd, kin=kin)
    assert np.abs(tau - rhs).max() < 1e-8


def test_state_copy_is_independent():
    s = DynState(np.zeros(3), np.ones(3), np.zeros(2, dtype=bool))
    c = s.copy()
    c.q[0] = 5
    assert s.q[0] == 0
