"""Per-frame physics correction of pose sequences.

Every frame solves one QP over ``x = [qdd (75), lam (69), tau (75)]``:

* track PD-derived target accelerations for the Euler angles and for the
  world positions of the 23 non-root joints,
* penalize reaction forces more the closer their joint is to the root, and
  penalize actuation torques (the root's more than the joints'),
* subject to the equation of motion ``M qdd + h = tau + J' lam``,
* each reaction force does little work (``|pdot_i . lam_i| <= delta``) and
  lies in a friction pyramid around the up axis.

No contact labels or ground plane appear anywhere: any joint may push
against the environment, the costs decide which ones do.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import rotmath
from .dynamics.model import N_CONTACT, N_DOF, DynState, Kinematics, RigidBodyModel, pose_to_state, state_to_pose
from .motion.sequence import Pose, PoseSequence, forward_kinematics
from .qp import STATUS_OPTIMAL, QpProblem, QpSettings, QpSolution, solve

N_X = 2 * N_DOF + N_CONTACT
_LAM = slice(N_DOF, N_DOF + N_CONTACT)
_TAU = slice(N_DOF + N_CONTACT, N_X)
ROWS_PER_CONTACT = 6
CHECK_TOL = 1e-6


@dataclass(frozen=True)
class PdGains:
    k_p_theta: float = 1800.0
    k_d_theta: float = 60.0
    k_p_pos: float = 2400.0
    k_d_pos: float = 60.0

    def __post_init__(self):
        if min(self.k_p_theta, self.k_d_theta, self.k_p_pos, self.k_d_pos) <= 0:
            raise ValueError("PD gains must be positive")


@dataclass(frozen=True)
class PhysParams:
    k_lambda: float = 0.02
    k_root: float = 0.05
    k_joint: float = 0.02
    delta: float = 10.0
    mu: float = 0.6
    dt: float = 1.0 / 60.0
    d_min: float = 0.01
    ridge: float = 1e-9
    qp: QpSettings = field(default_factory=QpSettings)

    def __post_init__(self):
        if not (self.delta > 0 and self.mu > 0 and self.dt > 0 and self.d_min > 0):
            raise ValueError("delta, mu, dt and d_min must be positive")
        if min(self.k_lambda, self.k_root, self.k_joint, self.ridge) < 0:
            raise ValueError("weights must be non-negative")


def desired_rot_acc(gains: PdGains, theta_ref, theta_cur, theta_dot) -> np.ndarray:
    err = rotmath.wrap_angle(np.asarray(theta_ref) - np.asarray(theta_cur))
    return gains.k_p_theta * err - gains.k_d_theta * np.asarray(theta_dot, dtype=np.float64)


def desired_pos_acc(gains: PdGains, pdot_ref, pdot_cur, dt: float = 1.0 / 60.0) -> np.ndarray:
    return gains.k_p_pos * np.asarray(pdot_ref, dtype=np.float64) * dt - gains.k_d_pos * np.asarray(pdot_cur)


def tangent_basis(up) -> tuple[np.ndarray, np.ndarray]:
    up = np.asarray(up, dtype=np.float64)
    e = np.eye(3)[int(np.argmin(np.abs(up)))]
    t1 = e - (e @ up) * up
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(up, t1)


@dataclass
class FrameProblem:
    """An assembled frame QP plus the quantities needed to check its solution."""

    problem: QpProblem
    M: np.ndarray
    h: np.ndarray
    J: np.ndarray
    pdot: np.ndarray          # (23, 3) current joint velocities
    distances: np.ndarray     # (23,) joint-to-root distances
    kin: Kinematics


def build_frame_problem(model: RigidBodyModel, state: DynState, theta_ref, pdot_ref,
                        params: PhysParams, gains: PdGains, kin: Kinematics | None = None) -> FrameProblem:
    kin = kin or model.kinematics(state.q)
    q, qd = state.q, state.qd
    M = model.mass_matrix(kin=kin)
    h = model.nonlinear_effects(q, qd, kin=kin)
    J = model.joint_jacobians(kin=kin)
    jdqd = model.jdot_qdot(q, qd, kin=kin)
    pdot = (J @ qd).reshape(-1, 3)

    th_des = desired_rot_acc(gains, theta_ref, q[3:], qd[3:])
    p_des = desired_pos_acc(gains, pdot_ref, pdot.reshape(-1), params.dt)

    pts = model.contact_points(kin)
    dist = np.linalg.norm(pts - kin.positions[0], axis=1)
    w_lam = params.k_lambda / np.maximum(dist, params.d_min) ** 2

    # objective as 1/2 x'Px + c'x (constant dropped)
    Pqq = 2.0 * (J.T @ J)
    Pqq[np.arange(3, N_DOF), np.arange(3, N_DOF)] += 2.0
    cq = -2.0 * (J.T @ (p_des - jdqd))
    cq[3:] -= 2.0 * th_des
    diag = np.concatenate([
        np.full(N_DOF, 2.0 * params.ridge),
        2.0 * np.repeat(w_lam, 3) + 2.0 * params.ridge,
        2.0 * np.concatenate([np.full(6, params.k_root), np.full(N_DOF - 6, params.k_joint)]) + 2.0 * params.ridge,
    ])
    P = sp.block_diag([sp.csc_matrix(Pqq), sp.csc_matrix((N_X - N_DOF, N_X - N_DOF))], format="csc")
    P = (P + sp.diags(diag)).tocsc()
    c = np.concatenate([cq, np.zeros(N_X - N_DOF)])

    A = sp.hstack([sp.csc_matrix(M), sp.csc_matrix(-J.T), -sp.identity(N_DOF)], format="csc")
    b = -h

    t1, t2 = tangent_basis(model.up)
    up, mu = model.up, params.mu
    n_c = N_CONTACT // 3
    rows, cols, vals = [], [], []
    hvec = np.zeros(ROWS_PER_CONTACT * n_c)
    for i in range(n_c):
        base = ROWS_PER_CONTACT * i
        col = N_DOF + 3 * i + np.arange(3)
        dirs = [pdot[i], -pdot[i], t1 - mu * up, -t1 - mu * up, t2 - mu * up, -t2 - mu * up]
        for r, d in enumerate(dirs):
            nz = d != 0
            rows.extend([base + r] * int(nz.sum()))
            cols.extend(col[nz])
            vals.extend(d[nz])
        hvec[base:base + 2] = params.delta
    G = sp.csc_matrix((vals, (rows, cols)), shape=(ROWS_PER_CONTACT * n_c, N_X))
    return FrameProblem(QpProblem(P, c, A, b, G, hvec), M, h, J, pdot, dist, kin)


def assemble(model: RigidBodyModel, state: DynState, theta_ref, pdot_ref, params: PhysParams | None = None,
             gains: PdGains | None = None) -> QpProblem:
    return build_frame_problem(model, state, theta_ref, pdot_ref, params or PhysParams(), gains or PdGains()).problem


@dataclass
class FrameCheck:
    eom_residual: float
    max_power: float
    friction_violation: float
    min_vertical: float

    def passed(self, params: PhysParams, tol: float = CHECK_TOL) -> bool:
        return (self.eom_residual <= tol and self.max_power <= params.delta + tol
                and self.friction_violation <= tol)


def check_frame(fp: FrameProblem, qdd, lam, tau, up, mu: float) -> FrameCheck:
    eom = fp.M @ qdd - tau - fp.J.T @ lam + fp.h
    L = np.asarray(lam).reshape(-1, 3)
    t1, t2 = tangent_basis(up)
    vert = L @ up
    fric = np.maximum(np.abs(L @ t1), np.abs(L @ t2)) - mu * vert
    return FrameCheck(
        eom_residual=float(np.abs(eom).max()),
        max_power=float(np.abs(np.sum(fp.pdot * L, axis=1)).max()),
        friction_violation=float(max(fric.max(), 0.0)),
        min_vertical=float(vert.min()),
    )


@dataclass
class FrameTrace:
    qdd: np.ndarray
    lam: np.ndarray
    tau: np.ndarray
    status: str
    residuals: dict
    gimbal: np.ndarray
    fallback: bool
    check: FrameCheck | None = None
    iterations: int = 0


@dataclass
class OptTrace:
    frames: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    def optimal_frames(self) -> list:
        return [f for f in self.frames if f.status == STATUS_OPTIMAL and not f.fallback]

    @property
    def lam(self) -> np.ndarray:
        return np.stack([f.lam for f in self.frames])

    @property
    def tau(self) -> np.ndarray:
        return np.stack([f.tau for f in self.frames])

    def n_fallback(self) -> int:
        return sum(f.fallback for f in self.frames)

    def write_force_csv(self, model: RigidBodyModel, path, first_frame: int = 1) -> None:
        joints = model.contact_joints()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "joint", "fx", "fy", "fz"])
            for t, f in enumerate(self.frames):
                for i, j in enumerate(joints):
                    w.writerow([t + first_frame, int(j), *(repr(float(v)) for v in f.lam[3 * i:3 * i + 3])])

    def write_torque_csv(self, path, first_frame: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "dof", "tau"])
            for t, f in enumerate(self.frames):
                for k, v in enumerate(f.tau):
                    w.writerow([t + first_frame, k, repr(float(v))])


def _reference_targets(model: RigidBodyModel, ref_next: Pose, kin: Kinematics, dt: float):
    theta_ref = model.q_from(ref_next.p_root, rotmath.rot_to_euler(ref_next.rots))[3:]
    pos, _ = forward_kinematics(model.skeleton, ref_next.p_root, ref_next.rots)
    p_next = pos[model.order[1:]]
    pdot_ref = (p_next - model.contact_points(kin)).reshape(-1) / dt
    return theta_ref, pdot_ref


def _fix_chart(model: RigidBodyModel, q, qd, theta_ref) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep every joint's Euler triple in the canonical chart.

    Joints whose middle angle left [-pi/2, pi/2] are re-decomposed (velocity
    mapped through the angular velocity); joints at the singularity are
    re-seeded from the reference with zero Euler rate.
    """
    q, qd = q.copy(), qd.copy()
    E = q[3:].reshape(-1, 3)
    Ed = qd[3:].reshape(-1, 3)
    flags = np.abs(np.cos(E[:, 1])) < rotmath.GIMBAL_EPS
    outside = np.abs(E[:, 1]) > np.pi / 2
    for d in np.flatnonzero(outside | flags):
        R = rotmath.euler_to_rot(E[d])
        if flags[d]:
            E[d] = theta_ref.reshape(-1, 3)[d]
            Ed[d] = 0.0
            continue
        omega = _euler_rate_matrix(E[d]) @ Ed[d]
        E[d] = rotmath.rot_to_euler(R)
        Ed[d] = np.linalg.solve(_euler_rate_matrix(E[d]), omega)
    q[3:] = rotmath.wrap_angle(E.reshape(-1))
    qd[3:] = Ed.reshape(-1)
    gimbal = np.zeros(len(E), dtype=bool)
    gimbal[flags] = True
    return q, qd, gimbal[model.inv_order]


def _euler_rate_matrix(e) -> np.ndarray:
    """Angular velocity (parent frame) per unit Euler rate, X-Y-Z intrinsic."""
    Rx = rotmath.rot_x(e[0])
    Rxy = Rx @ rotmath.rot_y(e[1])
    return np.stack([np.array([1.0, 0.0, 0.0]), Rx[:, 1], Rxy[:, 2]], axis=1)


def step(model: RigidBodyModel, state: DynState, ref_next: Pose, params: PhysParams | None = None,
         gains: PdGains | None = None, ref_cur: Pose | None = None,
         warm: QpSolution | None = None) -> tuple[DynState, FrameTrace, QpSolution]:
    """Advance one frame towards ``ref_next``.

    Returns the new state, the frame trace and the raw QP solution (usable as
    the next warm start). On QP failure the reference pose is copied
    kinematically and the frame flagged.
    """
    params = params or PhysParams()
    gains = gains or PdGains()
    kin = model.kinematics(state.q)
    theta_ref, pdot_ref = _reference_targets(model, ref_next, kin, params.dt)
    fp = build_frame_problem(model, state, theta_ref, pdot_ref, params, gains, kin)
    qs = params.qp
    if warm is not None:
        qs = replace(qs, warm_x=warm.x, warm_y=warm.y, warm_z=warm.z)
    sol = solve(fp.problem, qs)
    x = sol.x
    qdd, lam, tau = x[:N_DOF].copy(), x[_LAM].copy(), x[_TAU].copy()
    ok = sol.status == STATUS_OPTIMAL and np.all(np.isfinite(x))
    if ok:
        qd_new = state.qd + qdd * params.dt
        q_new = state.q + qd_new * params.dt
        q_new, qd_new, gimbal = _fix_chart(model, q_new, qd_new, theta_ref)
        new = DynState(q_new, qd_new, gimbal)
        check = check_frame(fp, qdd, lam, tau, model.up, params.mu)
        trace = FrameTrace(qdd, lam, tau, sol.status, sol.residuals.as_dict(), gimbal, False, check, sol.iterations)
        return new, trace, sol
    new = pose_to_state(model, ref_next, ref_cur, 1.0 / params.dt) if ref_cur is not None else \
        pose_to_state(model, ref_next)
    zeros = np.zeros
    trace = FrameTrace(zeros(N_DOF), zeros(N_CONTACT), zeros(N_DOF), sol.status, sol.residuals.as_dict(),
                       new.gimbal[model.order] if new.gimbal is not None else zeros(24, bool), True, None,
                       sol.iterations)
    return new, trace, sol


def optimize_sequence(model: RigidBodyModel, ref: PoseSequence, params: PhysParams | None = None,
                      gains: PdGains | None = None) -> tuple[PoseSequence, OptTrace]:
    """Physically corrected copy of ``ref``; frame 0 is the reference itself.

    The time step follows the sequence frame rate.
    """
    if len(ref) < 2:
        raise ValueError("reference needs at least 2 frames")
    params = replace(params or PhysParams(), dt=1.0 / ref.fps)
    gains = gains or PdGains()
    state = pose_to_state(model, ref[0], None, ref.fps)
    state.qd = pose_to_state(model, ref[1], ref[0], ref.fps).qd
    p_root = np.empty_like(ref.p_root)
    rots = np.empty_like(ref.rots)
    p_root[0], rots[0] = ref.p_root[0], ref.rots[0]
    trace = OptTrace()
    warm = None
    for t in range(1, len(ref)):
        state, ft, sol = step(model, state, ref[t], params, gains, ref_cur=ref[t - 1], warm=warm)
        trace.frames.append(ft)
        warm = None if ft.fallback else sol
        pose = state_to_pose(model, state)
        p_root[t], rots[t] = pose.p_root, pose.rots
    return PoseSequence(p_root, rots, ref.fps, ref.skeleton_name), trace

