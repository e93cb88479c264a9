"""Skeleton, pose sequences, motion frames, file I/O and synthetic motions."""
from .frames import FRAME_DIM, build_frames, frames_to_poses, renormalize_frames
from .io import FormatError, get_skeleton, load_motion, load_skeleton, save_motion, save_skeleton
from .sequence import Pose, PoseSequence, forward_kinematics, fk_pose, fk_sequence
from .skeleton import N_JOINTS, Skeleton, SkeletonError, default_skeleton
from .synthetic import KINDS, gen_climbing, gen_standing, gen_synthetic_motion, perturb_rotations

__all__ = [
    "FRAME_DIM", "build_frames", "frames_to_poses", "renormalize_frames",
    "FormatError", "get_skeleton", "load_motion", "load_skeleton", "save_motion", "save_skeleton",
    "Pose", "PoseSequence", "forward_kinematics", "fk_pose", "fk_sequence",
    "N_JOINTS", "Skeleton", "SkeletonError", "default_skeleton",
    "KINDS", "gen_climbing", "gen_standing", "gen_synthetic_motion", "perturb_rotations",
]
