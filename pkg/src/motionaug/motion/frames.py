"""240-dim motion frames and the reconstruction of poses from them.

Layout (grouped blocks, 19 joints in ascending SMPL index, see
``FRAME_JOINTS``)::

    [0:3)     root position, global (m)
    [3:6)     root velocity, global (m/s)
    [6:12)    root rotation, global (6D)
    [12:69)   joint positions in the root frame, 19 x 3
    [69:126)  joint velocities in the root frame, 19 x 3 (m/s)
    [126:240) joint rotations in the root frame, 19 x 6D
"""
from __future__ import annotations

import numpy as np

from .. import rotmath
from .sequence import PoseSequence, forward_kinematics
from .skeleton import FRAME_JOINTS, N_JOINTS, Skeleton

N_FRAME_JOINTS = len(FRAME_JOINTS)
FRAME_DIM = 3 + 3 + 6 + (3 + 3 + 6) * N_FRAME_JOINTS

_J = N_FRAME_JOINTS
P_ROOT = slice(0, 3)
V_ROOT = slice(3, 6)
R_ROOT = slice(6, 12)
P_JOINT = slice(12, 12 + 3 * _J)
V_JOINT = slice(P_JOINT.stop, P_JOINT.stop + 3 * _J)
R_JOINT = slice(V_JOINT.stop, V_JOINT.stop + 6 * _J)

# (20, 3) / (20, 6) index tables: block 0 is the root, blocks 1.. the joints
POS_INDEX = np.vstack([np.arange(0, 3), np.arange(P_JOINT.start, P_JOINT.stop).reshape(_J, 3)])
VEL_INDEX = np.vstack([np.arange(3, 6), np.arange(V_JOINT.start, V_JOINT.stop).reshape(_J, 3)])
ROT_INDEX = np.vstack([np.arange(6, 12), np.arange(R_JOINT.start, R_JOINT.stop).reshape(_J, 6)])


class FrameError(ValueError):
    pass


def build_frames(skel: Skeleton, seq: PoseSequence) -> np.ndarray:
    """Motion frames (T, 240) for a pose sequence.

    Velocities are forward differences times fps; frame 0 copies frame 1.
    """
    T = len(seq)
    if T < 2:
        raise FrameError("sequence must contain at least 2 poses")
    pos, glob = forward_kinematics(skel, seq.p_root, seq.rots)
    joints = list(FRAME_JOINTS)
    r_root = glob[:, 0]
    r_root_t = np.swapaxes(r_root, -1, -2)
    p_local = np.einsum("tij,tkj->tki", r_root_t, pos[:, joints] - pos[:, :1])
    r_local = r_root_t[:, None] @ glob[:, joints]

    def diff(x):
        v = np.empty_like(x)
        v[1:] = (x[1:] - x[:-1]) * seq.fps
        v[0] = v[1]
        return v

    out = np.empty((T, FRAME_DIM))
    out[:, P_ROOT] = pos[:, 0]
    out[:, V_ROOT] = diff(pos[:, 0])
    out[:, R_ROOT] = rotmath.rot_to_sixd(r_root)
    out[:, P_JOINT] = p_local.reshape(T, -1)
    out[:, V_JOINT] = diff(p_local).reshape(T, -1)
    out[:, R_JOINT] = rotmath.rot_to_sixd(r_local).reshape(T, -1)
    return out


def joint_rotations_root_frame(frames) -> np.ndarray:
    """(T, 19, 3, 3) renormalized joint rotations relative to the root."""
    frames = np.asarray(frames, dtype=np.float64)
    return rotmath.sixd_to_rot(frames[..., R_JOINT].reshape(frames.shape[:-1] + (N_FRAME_JOINTS, 6)))


def frames_to_poses(skel: Skeleton, frames, reference: PoseSequence) -> PoseSequence:
    """Rebuild poses from frames.

    Root position and orientation come from ``reference``; joint rotations
    come from the frames' rotation blocks, converted from the root frame to
    parent frames. Identity joints stay identity.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != FRAME_DIM:
        raise FrameError(f"frames must have shape (T, {FRAME_DIM}), got {frames.shape}")
    if frames.shape[0] != len(reference):
        raise FrameError(f"length mismatch: {frames.shape[0]} frames vs {len(reference)} reference poses")
    T = frames.shape[0]
    rel = joint_rotations_root_frame(frames)
    in_root = np.tile(np.eye(3), (T, N_JOINTS, 1, 1))
    in_root[:, list(FRAME_JOINTS)] = rel
    rots = np.tile(np.eye(3), (T, N_JOINTS, 1, 1))
    rots[:, 0] = reference.rots[:, 0]
    for j in FRAME_JOINTS:
        par = skel.parents[j]
        rots[:, j] = np.swapaxes(in_root[:, par], -1, -2) @ in_root[:, j]
    return PoseSequence(reference.p_root.copy(), rots, reference.fps, reference.skeleton_name)


def renormalize_frames(frames) -> np.ndarray:
    frames = np.array(frames, dtype=np.float64)
    blocks = frames[..., ROT_INDEX]
    frames[..., ROT_INDEX] = rotmath.renormalize_sixd(blocks)
    return frames
