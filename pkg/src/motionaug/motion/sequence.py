"""Poses, pose sequences and forward kinematics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rotmath
from .skeleton import IDENTITY_JOINTS, N_JOINTS, Skeleton


@dataclass
class Pose:
    """Single pose. ``rots[0]`` is the global root rotation, ``rots[1:]`` are
    joint rotations relative to the parent joint."""

    p_root: np.ndarray
    rots: np.ndarray

    @property
    def r_root(self) -> np.ndarray:
        return self.rots[0]

    @property
    def r_joints(self) -> np.ndarray:
        return self.rots[1:]


class PoseSequence:
    """Sequence of poses sampled at ``fps``, stored as stacked arrays.

    ``p_root`` has shape (T, 3) and ``rots`` shape (T, 24, 3, 3) with the
    same layout as :class:`Pose`.
    """

    def __init__(self, p_root, rots, fps: float = 60.0, skeleton_name: str = "smpl24"):
        self.p_root = np.asarray(p_root, dtype=np.float64)
        self.rots = np.array(rots, dtype=np.float64)
        self.fps = float(fps)
        self.skeleton_name = skeleton_name
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        T = self.p_root.shape[0]
        if self.p_root.shape != (T, 3) or self.rots.shape != (T, N_JOINTS, 3, 3):
            raise ValueError(f"bad shapes: p_root {self.p_root.shape}, rots {self.rots.shape}")
        self.rots[:, IDENTITY_JOINTS] = np.eye(3)
        # canonical form: third column = cross of the first two, bitwise
        self.rots = rotmath.sixd_to_rot(rotmath.rot_to_sixd(self.rots))

    def __len__(self) -> int:
        return self.p_root.shape[0]

    def __getitem__(self, t: int) -> Pose:
        return Pose(self.p_root[t], self.rots[t])

    @classmethod
    def from_poses(cls, poses, fps: float = 60.0, skeleton_name: str = "smpl24") -> "PoseSequence":
        poses = list(poses)
        return cls(np.stack([p.p_root for p in poses]), np.stack([p.rots for p in poses]), fps, skeleton_name)

    def copy(self) -> "PoseSequence":
        return PoseSequence(self.p_root.copy(), self.rots.copy(), self.fps, self.skeleton_name)

    @property
    def duration(self) -> float:
        return len(self) / self.fps


def forward_kinematics(skel: Skeleton, p_root, rots) -> tuple[np.ndarray, np.ndarray]:
    """Global joint positions (..., 24, 3) and rotations (..., 24, 3, 3).

    Accepts a single pose (``p_root`` (3,), ``rots`` (24, 3, 3)) or batches
    with matching leading dimensions.
    """
    p_root = np.asarray(p_root, dtype=np.float64)
    rots = np.asarray(rots, dtype=np.float64)
    lead = p_root.shape[:-1]
    pos = np.empty(lead + (N_JOINTS, 3))
    glob = np.empty(lead + (N_JOINTS, 3, 3))
    pos[..., 0, :] = p_root
    glob[..., 0, :, :] = rots[..., 0, :, :]
    for i in range(1, N_JOINTS):
        par = skel.parents[i]
        glob[..., i, :, :] = glob[..., par, :, :] @ rots[..., i, :, :]
        pos[..., i, :] = pos[..., par, :] + glob[..., par, :, :] @ skel.offsets[i]
    return pos, glob


def fk_pose(skel: Skeleton, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    return forward_kinematics(skel, pose.p_root, pose.rots)


def fk_sequence(skel: Skeleton, seq: PoseSequence) -> tuple[np.ndarray, np.ndarray]:
    return forward_kinematics(skel, seq.p_root, seq.rots)


def rest_sequence(n_frames: int, p_root=(0.0, 0.95, 0.0), fps: float = 60.0) -> PoseSequence:
    p = np.tile(np.asarray(p_root, dtype=np.float64), (n_frames, 1))
    rots = np.tile(np.eye(3), (n_frames, N_JOINTS, 1, 1))
    return PoseSequence(p, rots, fps)


def random_sequence(rng: np.random.Generator, n_frames: int, scale: float = 0.3, fps: float = 60.0) -> PoseSequence:
    """Random (not smooth) poses; useful for format and round-trip tests."""
    p = rng.normal(0.0, 1.0, (n_frames, 3))
    aa = rng.normal(0.0, scale, (n_frames, N_JOINTS, 3))
    aa[:, 0] = rng.normal(0.0, 1.0, (n_frames, 3))
    return PoseSequence(p, rotmath.axis_angle_to_rot(aa), fps)
