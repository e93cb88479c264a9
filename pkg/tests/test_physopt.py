import csv
from dataclasses import replace

import numpy as np
import pytest

from motionaug import rotmath as rm
from motionaug.dynamics import N_DOF, pose_to_state
from motionaug.motion import gen_synthetic_motion
from motionaug.physopt import (
    N_X, PdGains, PhysParams, _fix_chart, assemble, desired_pos_acc, desired_rot_acc, optimize_sequence,
    tangent_basis,
)
from motionaug.qp import QpSettings

GAINS = PdGains()


def test_rotational_pd_examples():
    z = np.zeros(3)
    np.testing.assert_array_equal(desired_rot_acc(GAINS, z, z, z), z)
    np.testing.assert_allclose(desired_rot_acc(GAINS, [0.1, 0, 0], z, z), [180, 0, 0], atol=1e-12)
    np.testing.assert_allclose(desired_rot_acc(GAINS, z, z, [1, 0, 0]), [-60, 0, 0], atol=1e-12)


def test_rotational_pd_wraps_error():
    acc = desired_rot_acc(GAINS, [np.pi - 0.05], [-np.pi + 0.05], [0.0])
    assert acc[0] == pytest.approx(1800 * -0.1, rel=1e-9)


def test_positional_pd_examples():
    z = np.zeros(3)
    np.testing.assert_array_equal(desired_pos_acc(GAINS, z, z), z)
    np.testing.assert_allclose(desired_pos_acc(GAINS, [1, 0, 0], z, 1 / 60), [40, 0, 0], atol=1e-12)
    np.testing.assert_allclose(desired_pos_acc(GAINS, z, [0, 1, 0], 1 / 60), [0, -60, 0], atol=1e-12)


@pytest.mark.parametrize("up", [[0, 1, 0], [0, 0, 1], [1 / np.sqrt(2), 1 / np.sqrt(2), 0]])
def test_tangent_basis(up):
    t1, t2 = tangent_basis(up)
    B = np.stack([t1, t2, up])
    np.testing.assert_allclose(B @ B.T, np.eye(3), atol=1e-15)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        PdGains(k_p_theta=0)
    with pytest.raises(ValueError):
        PhysParams(mu=0)


def test_frame_problem_dimensions(rbm):
    seq = gen_synthetic_motion("walk", 0.2, 0)
    state = pose_to_state(rbm, seq[0])
    p = assemble(rbm, state, state.q[3:], np.zeros(69))
    assert (p.n, p.n_eq, p.n_in) == (N_X, 75, 138)


@pytest.fixture(scope="module")
def short_walk(rbm):
    ref = gen_synthetic_motion("walk", 0.5, 2)
    out, trace = optimize_sequence(rbm, ref)
    return ref, out, trace


def test_short_walk_post_checks(short_walk, skel):
    ref, out, trace = short_walk
    params = PhysParams()
    assert len(trace) == len(ref) - 1 and trace.n_fallback() == 0
    for f in trace.optimal_frames():
        assert f.check.passed(params)
        assert f.check.min_vertical >= -1e-9
    assert len(out) == len(ref)
    np.testing.assert_array_equal(out.p_root[0], ref.p_root[0])
    for R in out.rots.reshape(-1, 3, 3):
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-9


def test_output_tracks_reference(short_walk):
    ref, out, _ = short_walk
    assert np.abs(out.p_root - ref.p_root).max() < 0.05


def test_trace_csv_files(short_walk, rbm, tmp_path):
    _, _, trace = short_walk
    trace.write_force_csv(rbm, tmp_path / "f.csv")
    trace.write_torque_csv(tmp_path / "t.csv")
    forces = list(csv.reader(open(tmp_path / "f.csv")))
    torques = list(csv.reader(open(tmp_path / "t.csv")))
    assert forces[0] == ["frame", "joint", "fx", "fy", "fz"]
    assert torques[0] == ["frame", "dof", "tau"]
    assert len(forces) == 1 + 23 * len(trace) and len(torques) == 1 + 75 * len(trace)
    assert {int(r[1]) for r in forces[1:]} == set(range(1, 24))


def test_deterministic(rbm, short_walk):
    ref, out, trace = short_walk
    out2, trace2 = optimize_sequence(rbm, ref)
    assert out.rots.tobytes() == out2.rots.tobytes()
    assert trace.lam.tobytes() == trace2.lam.tobytes()


def test_solver_failure_falls_back_to_reference(rbm):
    ref = gen_synthetic_motion("walk", 0.1, 0)
    params = PhysParams(qp=QpSettings(max_iter=1, polish=False))
    out, trace = optimize_sequence(rbm, ref, params)
    assert trace.n_fallback() == len(trace)
    assert not trace.optimal_frames()
    assert rm.geodesic_deg(out.rots, ref.rots).max() < 1e-6
    np.testing.assert_allclose(out.p_root, ref.p_root, atol=1e-12)


def test_chart_fix_keeps_rotation(rbm):
    q = np.zeros(N_DOF)
    sl = rbm.dof_slice(4)
    q[sl] = [0.3, np.pi / 2 + 0.2, -0.4]
    qd = np.zeros(N_DOF)
    qd[sl] = [0.1, 0.2, 0.3]
    q2, qd2, gimbal = _fix_chart(rbm, q, qd, np.zeros(N_DOF - 3))
    assert abs(q2[sl][1]) <= np.pi / 2
    np.testing.assert_allclose(rm.euler_to_rot(q2[sl]), rm.euler_to_rot(q[sl]), atol=1e-12)
    assert not gimbal.any()


def test_chart_fix_reseeds_singular_joint(rbm):
    q = np.zeros(N_DOF)
    sl = rbm.dof_slice(6)
    q[sl] = [0.0, np.pi / 2, 0.0]
    ref = np.full(N_DOF - 3, 0.05)
    q2, qd2, gimbal = _fix_chart(rbm, q, np.ones(N_DOF), ref)
    np.testing.assert_allclose(q2[sl], 0.05)
    np.testing.assert_array_equal(qd2[sl], 0.0)
    assert gimbal[6] and gimbal.sum() == 1


def test_time_step_follows_frame_rate(rbm):
    ref = gen_synthetic_motion("walk", 0.2, 0, fps=30.0)
    out, trace = optimize_sequence(rbm, ref, replace(PhysParams(), dt=1.0))
    assert out.fps == 30.0 and trace.n_fallback() == 0
