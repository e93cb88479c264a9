"""24-joint SMPL skeleton with per-segment mass properties."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 24

SMPL_JOINT_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow", "left_wrist", "right_wrist", "left_hand", "right_hand",
)
SMPL_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)

# feet and hands are kept at identity rotation
IDENTITY_JOINTS = (10, 11, 22, 23)
# joints carried by a motion frame, in ascending SMPL index
FRAME_JOINTS = tuple(j for j in range(1, N_JOINTS) if j not in IDENTITY_JOINTS)

# rest-pose offsets from parent, metres, y up, z forward
SMPL_OFFSETS = (
    (0.0, 0.0, 0.0),
    (0.059, -0.082, -0.018), (-0.060, -0.091, -0.014), (0.004, 0.124, -0.038),
    (0.044, -0.387, 0.008), (-0.043, -0.384, -0.005), (0.005, 0.138, 0.027),
    (-0.015, -0.427, -0.037), (0.019, -0.420, -0.035), (-0.002, 0.056, 0.003),
    (0.041, -0.060, 0.122), (-0.035, -0.062, 0.130), (-0.013, 0.212, -0.034),
    (0.072, 0.114, -0.019), (-0.083, 0.113, -0.024), (0.010, 0.089, 0.050),
    (0.123, 0.045, -0.019), (-0.113, 0.047, -0.009), (0.255, -0.016, -0.023),
    (-0.260, -0.014, -0.031), (0.266, 0.013, -0.007), (-0.269, 0.007, -0.006),
    (0.087, -0.011, -0.016), (-0.089, -0.010, -0.011),
)

# relative segment masses (normalized to the total below)
_MASS_FRACTIONS = (
    0.110, 0.100, 0.100, 0.080, 0.045, 0.045, 0.080, 0.012, 0.012, 0.080, 0.003, 0.003,
    0.020, 0.020, 0.020, 0.060, 0.027, 0.027, 0.016, 0.016, 0.005, 0.005, 0.001, 0.001,
)
DEFAULT_TOTAL_MASS = 70.0
INERTIA_FLOOR = 1e-4


class SkeletonError(ValueError):
    pass


def inertia_to_matrix(six) -> np.ndarray:
    """(Ixx, Iyy, Izz, Ixy, Ixz, Iyz) -> symmetric 3x3."""
    ixx, iyy, izz, ixy, ixz, iyz = np.asarray(six, dtype=np.float64)
    return np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])


def matrix_to_inertia(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return np.array([m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2]])


@dataclass
class Skeleton:
    """Joint hierarchy plus the rigid-body data the dynamics stage needs.

    Inertia is stored as 6 numbers ``(Ixx, Iyy, Izz, Ixy, Ixz, Iyz)`` about
    the segment centre of mass, in the segment frame.
    """

    names: list[str]
    parents: np.ndarray
    offsets: np.ndarray
    masses: np.ndarray
    coms: np.ndarray
    inertias: np.ndarray
    up_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    name: str = "smpl24"

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        self.masses = np.asarray(self.masses, dtype=np.float64)
        self.coms = np.asarray(self.coms, dtype=np.float64)
        self.inertias = np.asarray(self.inertias, dtype=np.float64)
        self.up_axis = np.asarray(self.up_axis, dtype=np.float64)
        self.validate()

    @property
    def n_joints(self) -> int:
        return len(self.names)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def inertia_matrices(self) -> np.ndarray:
        return np.stack([inertia_to_matrix(i) for i in self.inertias])

    def validate(self) -> None:
        n = len(self.names)
        if n != N_JOINTS:
            raise SkeletonError(f"joint count must be {N_JOINTS}, got {n}")
        shapes = {
            "parents": (self.parents, (n,)),
            "offsets": (self.offsets, (n, 3)),
            "masses": (self.masses, (n,)),
            "coms": (self.coms, (n, 3)),
            "inertias": (self.inertias, (n, 6)),
            "up_axis": (self.up_axis, (3,)),
        }
        for key, (arr, shape) in shapes.items():
            if arr.shape != shape:
                raise SkeletonError(f"{key}: expected shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise SkeletonError(f"{key}: non-finite values")
        if self.parents[0] != -1:
            raise SkeletonError("joint 0 must be the root (parent -1)")
        for i in range(1, n):
            if not 0 <= self.parents[i] < i:
                raise SkeletonError(f"joint {i} ({self.names[i]}): parent index must be in [0, {i})")
        if len(set(self.names)) != n:
            raise SkeletonError("joint names must be unique")
        bad = np.flatnonzero(self.masses <= 0)
        if bad.size:
            raise SkeletonError(f"joint {bad[0]} ({self.names[bad[0]]}): mass must be positive")
        for i, six in enumerate(self.inertias):
            if np.linalg.eigvalsh(inertia_to_matrix(six)).min() <= 0:
                raise SkeletonError(f"joint {i} ({self.names[i]}): inertia must be positive definite")
        if abs(np.linalg.norm(self.up_axis) - 1.0) > 1e-9:
            raise SkeletonError("up_axis must be a unit vector")

    def children(self, i: int) -> list[int]:
        return [j for j in range(self.n_joints) if self.parents[j] == i]

    def scaled(self, s: float) -> "Skeleton":
        """Copy with all lengths multiplied by ``s`` (masses unchanged)."""
        return Skeleton(
            list(self.names), self.parents.copy(), self.offsets * s, self.masses.copy(),
            self.coms * s, self.inertias * s * s, self.up_axis.copy(), self.name,
        )


def _box_inertia(mass: float, bone: np.ndarray) -> np.ndarray:
    length = float(np.linalg.norm(bone))
    width = max(0.3 * length, 0.04)
    length = max(length, 0.04)
    along = mass * (2 * width * width) / 12.0
    across = mass * (length * length + width * width) / 12.0
    u = bone / np.linalg.norm(bone) if np.linalg.norm(bone) > 0 else np.array([0.0, 1.0, 0.0])
    P = np.outer(u, u)
    return along * P + across * (np.eye(3) - P) + INERTIA_FLOOR * np.eye(3)


def default_skeleton(total_mass: float = DEFAULT_TOTAL_MASS) -> Skeleton:
    """SMPL hierarchy with anthropometric mass properties.

    Each segment spans from its joint towards the mean of its children; leaf
    segments extend 10 cm along the incoming bone. Inertia is a solid box
    around the segment plus a small isotropic floor.
    """
    offsets = np.array(SMPL_OFFSETS, dtype=np.float64)
    fractions = np.array(_MASS_FRACTIONS)
    masses = total_mass * fractions / fractions.sum()
    parents = np.array(SMPL_PARENTS)
    coms = np.zeros((N_JOINTS, 3))
    inertias = np.zeros((N_JOINTS, 6))
    for i in range(N_JOINTS):
        kids = [j for j in range(N_JOINTS) if parents[j] == i]
        if kids:
            bone = offsets[kids].mean(axis=0)
        else:
            d = offsets[i]
            bone = 0.1 * d / np.linalg.norm(d)
        coms[i] = 0.5 * bone
        inertias[i] = matrix_to_inertia(_box_inertia(masses[i], bone))
    return Skeleton(list(SMPL_JOINT_NAMES), parents, offsets, masses, coms, inertias)
