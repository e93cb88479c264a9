"""Floating-base articulated model of the 24-joint skeleton.

Generalized coordinates (75): root position (3), then three Euler angles
(intrinsic X-Y-Z, the convention of :mod:`motionaug.rotmath`) per joint in
dynamics order, root first. Each angle is modelled as a 1-DoF revolute joint
about the appropriate world axis so that a plain tree recursion over the 75
DoFs gives mass matrix, bias forces and Jacobians.

The joint-order map ``order[d] = skeleton index`` defaults to the identity;
any permutation that keeps parents before children and the root at 0 works.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rotmath
from ..motion.sequence import Pose
from ..motion.skeleton import N_JOINTS, Skeleton
from . import backend

GRAVITY = 9.81
N_DOF = 3 + 3 * N_JOINTS
N_CONTACT = 3 * (N_JOINTS - 1)


class JointOrderError(ValueError):
    pass


def spatial_inertia(mass, com, inertia_com) -> np.ndarray:
    """6x6 spatial inertia about the origin for a body with centre of mass
    ``com`` and rotational inertia ``inertia_com`` (about the com), all in the
    same frame. Accepts leading batch dimensions."""
    mass = np.asarray(mass, dtype=np.float64)[..., None, None]
    C = rotmath.skew(com)
    I = np.empty(C.shape[:-2] + (6, 6))
    I[..., :3, :3] = inertia_com + mass * C @ np.swapaxes(C, -1, -2)
    I[..., :3, 3:] = mass * C
    I[..., 3:, :3] = mass * np.swapaxes(C, -1, -2)
    I[..., 3:, 3:] = mass * np.eye(3)
    return I


@dataclass
class DynState:
    q: np.ndarray
    qd: np.ndarray
    gimbal: np.ndarray | None = None

    def copy(self) -> "DynState":
        return DynState(self.q.copy(), self.qd.copy(), None if self.gimbal is None else self.gimbal.copy())


@dataclass
class Kinematics:
    """Everything position-dependent for one configuration ``q``."""

    q: np.ndarray
    positions: np.ndarray      # (24, 3) world joint origins, skeleton order
    rotations: np.ndarray      # (24, 3, 3) world joint frames, skeleton order
    S: np.ndarray              # (75, 6) world-frame DoF axes
    inertia: np.ndarray        # (75, 6, 6) world-frame spatial inertia per DoF body


class RigidBodyModel:
    def __init__(self, skel: Skeleton, order=None, gravity: float = GRAVITY):
        self.skeleton = skel
        order = np.arange(N_JOINTS) if order is None else np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(N_JOINTS)):
            raise JointOrderError("joint order must be a permutation of 0..23")
        if order[0] != 0:
            raise JointOrderError("joint order must keep the root at index 0")
        inv = np.empty(N_JOINTS, dtype=np.int64)
        inv[order] = np.arange(N_JOINTS)
        for d in range(1, N_JOINTS):
            if inv[skel.parents[order[d]]] >= d:
                raise JointOrderError(f"dynamics joint {d}: parent must precede child")
        self.order = order
        self.inv_order = inv
        self.gravity = float(gravity)
        self.up = skel.up_axis.copy()
        self.a0 = np.concatenate([np.zeros(3), self.gravity * self.up])
        self.n_dof = N_DOF

        parent = np.empty(N_DOF, dtype=np.int64)
        parent[:6] = np.arange(-1, 5)
        for d in range(1, N_JOINTS):
            first = 3 + 3 * d
            parent[first] = self.body_dof(skel.parents[order[d]])
            parent[first + 1] = first
            parent[first + 2] = first + 1
        self.dof_parent = parent

        # DoFs that move the origin of non-root joint d (rows of the Jacobian)
        self.attach_dof = np.array([parent[3 + 3 * d] for d in range(1, N_JOINTS)])
        self.jac_mask = np.zeros((N_JOINTS - 1, N_DOF), dtype=bool)
        for i, k in enumerate(self.attach_dof):
            while k >= 0:
                self.jac_mask[i, k] = True
                k = parent[k]
        self._inertia_body = skel.inertia_matrices()

    @classmethod
    def from_skeleton(cls, skel: Skeleton, order=None) -> "RigidBodyModel":
        return cls(skel, order)

    @property
    def total_mass(self) -> float:
        return self.skeleton.total_mass

    def body_dof(self, joint: int) -> int:
        """Last DoF of a skeleton joint: the DoF that carries its body."""
        return 3 + 3 * int(self.inv_order[joint]) + 2

    def dof_slice(self, joint: int) -> slice:
        d = int(self.inv_order[joint])
        return slice(3 + 3 * d, 6 + 3 * d)

    def contact_joints(self) -> np.ndarray:
        """Skeleton index of each 3-row block of the Jacobian / force vector."""
        return self.order[1:].copy()

    # --- configuration <-> pose --------------------------------------------
    def euler_of(self, q) -> np.ndarray:
        """(24, 3) Euler angles in skeleton order."""
        q = np.asarray(q, dtype=np.float64)
        return q[3:].reshape(N_JOINTS, 3)[self.inv_order]

    def q_from(self, p_root, euler) -> np.ndarray:
        q = np.empty(N_DOF)
        q[:3] = p_root
        q[3:] = np.asarray(euler)[self.order].reshape(-1)
        return q

    def kinematics(self, q) -> Kinematics:
        q = np.asarray(q, dtype=np.float64)
        skel = self.skeleton
        e = self.euler_of(q)
        Rx = rotmath.rot_x(e[:, 0])
        Rxy = Rx @ rotmath.rot_y(e[:, 1])
        local = Rxy @ rotmath.rot_z(e[:, 2])
        pos = np.empty((N_JOINTS, 3))
        glob = np.empty((N_JOINTS, 3, 3))
        pos[0], glob[0] = q[:3], local[0]
        for j in range(1, N_JOINTS):
            par = skel.parents[j]
            pos[j] = pos[par] + glob[par] @ skel.offsets[j]
            glob[j] = glob[par] @ local[j]
        Rp = np.empty_like(glob)
        Rp[0] = np.eye(3)
        Rp[1:] = glob[skel.parents[1:]]
        axes = np.stack([Rp[:, :, 0], (Rp @ Rx[:, :, 1:2])[..., 0], (Rp @ Rxy[:, :, 2:3])[..., 0]], axis=1)
        S = np.zeros((N_DOF, 6))
        S[0:3, 3:] = np.eye(3)
        S_joint = S[3:].reshape(N_JOINTS, 3, 6)
        S_joint[self.inv_order, :, :3] = axes
        S_joint[self.inv_order, :, 3:] = np.cross(pos[:, None, :], axes)
        com = pos + np.einsum("jab,jb->ja", glob, skel.coms)
        inertia_world = glob @ self._inertia_body @ np.swapaxes(glob, -1, -2)
        inertia = np.zeros((N_DOF, 6, 6))
        inertia[3 + 3 * self.inv_order + 2] = spatial_inertia(skel.masses, com, inertia_world)
        return Kinematics(q.copy(), pos, glob, S, inertia)

    def contact_points(self, kin: Kinematics) -> np.ndarray:
        """(23, 3) world positions of the non-root joints in dynamics order."""
        return kin.positions[self.order[1:]]

    # --- dynamics terms ------------------------------------------------------
    def mass_matrix(self, q=None, kin: Kinematics | None = None) -> np.ndarray:
        kin = kin or self.kinematics(q)
        return backend.kernels.crba(self.dof_parent, kin.S, kin.inertia)

    def inverse_dynamics(self, q, qd, qdd, kin: Kinematics | None = None, gravity: bool = True) -> np.ndarray:
        kin = kin or self.kinematics(q)
        a0 = self.a0 if gravity else np.zeros(6)
        return backend.kernels.rnea(self.dof_parent, kin.S, kin.inertia, _vec(qd), _vec(qdd), a0)

    def nonlinear_effects(self, q, qd, kin: Kinematics | None = None, gravity: bool = True) -> np.ndarray:
        return self.inverse_dynamics(q, qd, np.zeros(N_DOF), kin, gravity)

    def joint_jacobians(self, q=None, kin: Kinematics | None = None) -> np.ndarray:
        """(69, 75) stacked positional Jacobians of the 23 non-root joints."""
        kin = kin or self.kinematics(q)
        pts = self.contact_points(kin)
        w, v = kin.S[:, :3], kin.S[:, 3:]
        cols = v[None] + np.cross(w[None], pts[:, None, :])            # (23, 75, 3)
        cols *= self.jac_mask[..., None]
        return np.ascontiguousarray(cols.transpose(0, 2, 1).reshape(N_CONTACT, N_DOF))

    def point_velocities(self, qd, kin: Kinematics) -> np.ndarray:
        """(69,) world velocities of the non-root joints (equals ``J @ qd``)."""
        v, _ = backend.kernels.forward_pass(self.dof_parent, kin.S, _vec(qd), np.zeros(N_DOF), np.zeros(6))
        out = np.empty((N_JOINTS - 1, 3))
        for i, (k, x) in enumerate(zip(self.attach_dof, self.contact_points(kin))):
            out[i] = v[k, 3:] + np.cross(v[k, :3], x)
        return out.reshape(-1)

    def jdot_qdot(self, q, qd, kin: Kinematics | None = None) -> np.ndarray:
        """(69,) joint accelerations produced by ``qd`` alone (zero ``qdd``, no gravity)."""
        kin = kin or self.kinematics(q)
        v, a = backend.kernels.forward_pass(self.dof_parent, kin.S, _vec(qd), np.zeros(N_DOF), np.zeros(6))
        out = np.empty((N_JOINTS - 1, 3))
        for i, (k, x) in enumerate(zip(self.attach_dof, self.contact_points(kin))):
            out[i] = point_acceleration(v[k], a[k], x)
        return out.reshape(-1)

    def energy(self, q, qd) -> tuple[float, float]:
        """(kinetic, potential) energy; potential measured along the up axis."""
        kin = self.kinematics(q)
        qd = _vec(qd)
        kinetic = 0.5 * qd @ self.mass_matrix(kin=kin) @ qd
        skel = self.skeleton
        coms = kin.positions + np.einsum("jab,jb->ja", kin.rotations, skel.coms)
        potential = self.gravity * float(skel.masses @ (coms @ self.up))
        return float(kinetic), potential


def point_acceleration(v_body, a_body, x) -> np.ndarray:
    """Classical acceleration of the body-fixed point ``x`` from the body's
    spatial velocity and spatial acceleration (origin-referenced)."""
    w, vo = v_body[:3], v_body[3:]
    alpha, ao = a_body[:3], a_body[3:]
    xdot = vo + np.cross(w, x)
    return ao + np.cross(alpha, x) + np.cross(w, xdot)


def _vec(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def from_skeleton(skel: Skeleton, order=None) -> RigidBodyModel:
    return RigidBodyModel(skel, order)


def pose_to_state(model: RigidBodyModel, pose: Pose, prev: Pose | None = None, fps: float = 60.0) -> DynState:
    """Generalized state from a pose (velocities by wrapped finite difference
    against ``prev``; zero without it). ``gimbal`` flags joints whose Euler
    decomposition hit the singular configuration."""
    e, flags = rotmath.rot_to_euler(pose.rots, return_flags=True)
    q = model.q_from(pose.p_root, e)
    qd = np.zeros(N_DOF)
    if prev is not None:
        e_prev = rotmath.rot_to_euler(prev.rots)
        qp = model.q_from(prev.p_root, e_prev)
        qd[:3] = (q[:3] - qp[:3]) * fps
        qd[3:] = rotmath.wrap_angle(q[3:] - qp[3:]) * fps
    return DynState(q, qd, flags)


def state_to_pose(model: RigidBodyModel, state: DynState | np.ndarray) -> Pose:
    q = state.q if isinstance(state, DynState) else np.asarray(state, dtype=np.float64)
    rots = rotmath.euler_to_rot(model.euler_of(q))
    return Pose(q[:3].copy(), rots)


def mass_matrix(model: RigidBodyModel, q) -> np.ndarray:
    return model.mass_matrix(q)


def nonlinear_effects(model: RigidBodyModel, q, qd) -> np.ndarray:
    return model.nonlinear_effects(q, qd)


def inverse_dynamics(model: RigidBodyModel, q, qd, qdd) -> np.ndarray:
    return model.inverse_dynamics(q, qd, qdd)


def joint_jacobians(model: RigidBodyModel, q) -> np.ndarray:
    return model.joint_jacobians(q)


def jdot_qdot(model: RigidBodyModel, q, qd) -> np.ndarray:
    return model.jdot_qdot(q, qd)
