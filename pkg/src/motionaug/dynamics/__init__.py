"""Articulated rigid-body dynamics of the skeleton (mass matrix, bias forces, Jacobians)."""
from . import backend
from .model import (
    GRAVITY, N_CONTACT, N_DOF, DynState, JointOrderError, Kinematics, RigidBodyModel, from_skeleton,
    inverse_dynamics, jdot_qdot, joint_jacobians, mass_matrix, nonlinear_effects, point_acceleration,
    pose_to_state, spatial_inertia, state_to_pose,
)

__all__ = [
    "backend", "GRAVITY", "N_CONTACT", "N_DOF", "DynState", "JointOrderError", "Kinematics", "RigidBodyModel",
    "from_skeleton", "inverse_dynamics", "jdot_qdot", "joint_jacobians", "mass_matrix", "nonlinear_effects",
    "point_acceleration", "pose_to_state", "spatial_inertia", "state_to_pose",
]
