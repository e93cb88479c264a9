"""Smooth synthetic motions for desk-scale experiments.

Joint angles are short sums of sinusoids taken from per-kind tables; the
seed perturbs amplitudes and phases slightly. Everything is sampled at
60 fps and stays well under 10 rad/s of joint angular velocity.
"""
from __future__ import annotations

import numpy as np

from .. import rotmath
from .sequence import PoseSequence
from .skeleton import N_JOINTS, SMPL_OFFSETS

FPS = 60.0
KINDS = ("walk", "wave", "squat", "mixed")
ROOT_HEIGHT = 0.93

# joint -> list of (axis, offset, amplitude, frequency multiplier, phase)
_ARMS_DOWN = {
    16: [(2, -1.2, 0.0, 0.0, 0.0)],
    17: [(2, 1.2, 0.0, 0.0, 0.0)],
}
_WALK = {
    1: [(0, -0.05, 0.40, 1.0, 0.0)],
    2: [(0, -0.05, 0.40, 1.0, np.pi)],
    4: [(0, 0.35, 0.30, 1.0, np.pi / 2 + np.pi)],
    5: [(0, 0.35, 0.30, 1.0, np.pi / 2)],
    7: [(0, -0.05, 0.15, 1.0, 0.3)],
    8: [(0, -0.05, 0.15, 1.0, 0.3 + np.pi)],
    3: [(1, 0.0, 0.06, 1.0, np.pi)],
    6: [(1, 0.0, 0.04, 1.0, np.pi)],
    16: [(2, -1.2, 0.0, 0.0, 0.0), (0, 0.0, 0.30, 1.0, np.pi)],
    17: [(2, 1.2, 0.0, 0.0, 0.0), (0, 0.0, 0.30, 1.0, 0.0)],
    18: [(1, 0.25, 0.10, 1.0, np.pi)],
    19: [(1, -0.25, 0.10, 1.0, 0.0)],
}
_WAVE = {
    16: [(2, -1.2, 0.0, 0.0, 0.0)],
    17: [(2, 0.3, 0.0, 0.0, 0.0)],
    19: [(1, -0.8, 0.0, 0.0, 0.0), (2, 0.2, 0.45, 1.5, 0.0)],
    21: [(2, 0.0, 0.2, 1.5, 0.5)],
    12: [(1, 0.0, 0.05, 0.5, 0.0)],
    9: [(2, 0.0, 0.04, 0.75, 0.0)],
}
_SQUAT = {
    1: [(0, -0.55, 0.55, 0.5, np.pi / 2)],
    2: [(0, -0.55, 0.55, 0.5, np.pi / 2)],
    4: [(0, 0.95, 0.95, 0.5, -np.pi / 2)],
    5: [(0, 0.95, 0.95, 0.5, -np.pi / 2)],
    7: [(0, -0.35, 0.35, 0.5, np.pi / 2)],
    8: [(0, -0.35, 0.35, 0.5, np.pi / 2)],
    3: [(0, 0.15, 0.15, 0.5, -np.pi / 2)],
    16: [(2, -1.2, 0.0, 0.0, 0.0), (0, -0.4, 0.4, 0.5, np.pi / 2)],
    17: [(2, 1.2, 0.0, 0.0, 0.0), (0, -0.4, 0.4, 0.5, np.pi / 2)],
}


class UnknownKindError(ValueError):
    pass


def _angles(table, t, base_freq, rng) -> np.ndarray:
    """Euler angles (T, 24, 3) from a sinusoid table."""
    out = np.zeros((t.size, N_JOINTS, 3))
    for joint in sorted(table):
        for axis, offset, amp, fmul, phase in table[joint]:
            if amp == 0.0:
                out[:, joint, axis] += offset
                continue
            gain = rng.uniform(0.9, 1.1)
            dphi = rng.normal(0.0, 0.1)
            out[:, joint, axis] += offset + gain * amp * np.sin(2 * np.pi * fmul * base_freq * t + phase + dphi)
    return out


def _merge(*tables) -> dict:
    merged: dict = {}
    for table in tables:
        for joint, rows in table.items():
            merged[joint] = list(rows)
    return merged


def gen_synthetic_motion(kind: str, seconds: float, seed: int, skel=None, fps: float = FPS) -> PoseSequence:
    """Deterministic smooth motion of the given kind.

    ``skel`` is accepted for interface symmetry; the generator only needs the
    standard SMPL hierarchy.
    """
    if kind not in KINDS:
        raise UnknownKindError(f"unknown motion kind '{kind}' (expected one of {KINDS})")
    if not seconds > 0:
        raise ValueError("seconds must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(seconds * fps))
    t = np.arange(n) / fps
    freq = rng.uniform(0.9, 1.1)
    p_root = np.zeros((n, 3))
    p_root[:, 1] = ROOT_HEIGHT
    root_euler = np.zeros((n, 3))
    if kind == "walk":
        angles = _angles(_WALK, t, freq, rng)
        speed = 1.2 * freq
        p_root[:, 2] = speed * t
        p_root[:, 1] += 0.02 * np.sin(2 * np.pi * 2 * freq * t)
        root_euler[:, 1] = 0.05 * np.sin(2 * np.pi * freq * t)
    elif kind == "wave":
        angles = _angles(_WAVE, t, freq, rng)
        p_root[:, 0] = 0.01 * np.sin(2 * np.pi * 0.3 * t)
    elif kind == "squat":
        angles = _angles(_SQUAT, t, freq, rng)
        depth = 0.5 * (1 - np.cos(2 * np.pi * 0.5 * freq * t))
        p_root[:, 1] -= 0.30 * depth
        p_root[:, 2] -= 0.08 * depth
    else:
        arms = {k: v for k, v in _WAVE.items() if k in (17, 19, 21)}
        angles = _angles(_merge(_WALK, arms), t, freq, rng)
        p_root[:, 2] = 0.8 * freq * t
        p_root[:, 1] += 0.015 * np.sin(2 * np.pi * 2 * freq * t)
        root_euler[:, 1] = 0.04 * np.sin(2 * np.pi * freq * t)
    angles[:, 0] = root_euler
    rots = rotmath.euler_to_rot(angles)
    return PoseSequence(p_root, rots, fps)


def gen_standing(seconds: float, fps: float = FPS) -> PoseSequence:
    """Motionless upright pose, arms lowered."""
    n = int(round(seconds * fps))
    angles = _angles(_ARMS_DOWN, np.zeros(n), 1.0, np.random.default_rng(0))
    p_root = np.tile([0.0, ROOT_HEIGHT, 0.0], (n, 1))
    return PoseSequence(p_root, rotmath.euler_to_rot(angles), fps)


def _leg_ik(hip_yz, ankle_yz, thigh_yz, shank_yz) -> tuple[float, float]:
    """Hip and knee angles about x placing the ankle at ``ankle_yz``.

    Rotations about x act on (y, z) as planar rotations, so the problem is an
    exact planar two-link IK. Out-of-reach targets are pulled in.
    """
    d = np.asarray(ankle_yz) - np.asarray(hip_yz)
    l1, l2 = np.linalg.norm(thigh_yz), np.linalg.norm(shank_yz)
    r = np.linalg.norm(d)
    r = np.clip(r, abs(l1 - l2) + 1e-6, l1 + l2 - 1e-6)
    ang = lambda v: np.arctan2(v[1], v[0])  # noqa: E731  angle in the (y, z) plane
    beta0 = ang(shank_yz) - ang(thigh_yz)
    c = (r * r - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    knee = np.arccos(np.clip(c, -1.0, 1.0)) - beta0
    if knee < -beta0:
        knee = -np.arccos(np.clip(c, -1.0, 1.0)) - beta0
    ck, sk = np.cos(knee), np.sin(knee)
    v = np.asarray(thigh_yz) + np.array([ck * shank_yz[0] - sk * shank_yz[1], sk * shank_yz[0] + ck * shank_yz[1]])
    hip = ang(d) - ang(v)
    return float(hip), float(knee)


def gen_climbing(seconds: float, seed: int = 0, fps: float = FPS, step_rise: float = 0.17,
                 step_depth: float = 0.28, step_time: float = 1.0) -> PoseSequence:
    """Stair climbing: the feet alternately swing up to the next tread.

    During stance an ankle is held exactly still in world space (planar leg
    IK); there is no ground plane anywhere, the treads rise with each step.
    """
    rng = np.random.default_rng(seed)
    n = int(round(seconds * fps))
    t = np.arange(n) / fps
    off = np.array(SMPL_OFFSETS)
    thigh = {1: off[4, 1:], 2: off[5, 1:]}
    shank = {1: off[7, 1:], 2: off[8, 1:]}
    hip_off = {1: off[1], 2: off[2]}
    ankle_h = 0.08
    crouch = 0.62 + rng.uniform(-0.01, 0.01)
    lead = 0.5

    def foothold(side, k):
        # left treads 0, 1, 3, 5, ...; right treads 0, 2, 4, ...
        if side == 1:
            return 0 if k == 0 else 2 * k - 1
        return 2 * k

    def foot_yz(side, time):
        # swing k of the left foot spans [lead + 2k, lead + 2k + 1); right is one step later
        shift = 0.0 if side == 1 else step_time
        phase = (time - lead - shift) / step_time
        if phase < 0:
            k, s = 0, 0.0
        else:
            k = int(np.floor(phase / 2.0))
            s = min(phase - 2.0 * k, 1.0)
        start, target = foothold(side, k), foothold(side, k + 1)
        w = 0.5 * (1 - np.cos(np.pi * s))
        y0, z0 = start * step_rise, start * step_depth
        y1, z1 = target * step_rise, target * step_depth
        lift = 0.08 * np.sin(np.pi * s)
        return np.array([ankle_h + y0 + w * (y1 - y0) + lift, z0 + w * (z1 - z0)])

    angles = np.zeros((n, N_JOINTS, 3))
    angles[:, 16, 2] = -1.2
    angles[:, 17, 2] = 1.2
    p_root = np.zeros((n, 3))
    for i, ti in enumerate(t):
        feet = {s: foot_yz(s, ti) for s in (1, 2)}
        mid = 0.5 * (feet[1] + feet[2])
        p_root[i] = [0.0, mid[0] - ankle_h + crouch, mid[1] - 0.05]
        for side, hip_j, knee_j, ankle_j in ((1, 1, 4, 7), (2, 2, 5, 8)):
            hip_yz = p_root[i, 1:] + hip_off[side][1:]
            a_hip, a_knee = _leg_ik(hip_yz, feet[side], thigh[side], shank[side])
            angles[i, hip_j, 0] = a_hip
            angles[i, knee_j, 0] = a_knee
            angles[i, ankle_j, 0] = -(a_hip + a_knee)
    return PoseSequence(p_root, rotmath.euler_to_rot(angles), fps)


def perturb_rotations(seq: PoseSequence, scale: float, seed: int) -> PoseSequence:
    """Multiply every non-root joint rotation by an independent small random
    rotation (rotation vector ~ N(0, scale^2) per axis)."""
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, scale, (len(seq), N_JOINTS, 3))
    noise[:, 0] = 0.0
    rots = seq.rots @ rotmath.axis_angle_to_rot(noise)
    return PoseSequence(seq.p_root.copy(), rots, seq.fps, seq.skeleton_name)
