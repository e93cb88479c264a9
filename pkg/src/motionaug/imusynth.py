"""Virtual IMU signals (global acceleration and orientation) at body sites."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rotmath
from .motion.io import FormatError, read_json, write_json
from .motion.sequence import PoseSequence, fk_sequence
from .motion.skeleton import N_JOINTS, Skeleton
from .rotmath import DegenerateRotationError

DEFAULT_SITES = (0, 15, 20, 21, 4, 5)   # pelvis, head, wrists, knees


@dataclass
class ImuConfig:
    sites: tuple = DEFAULT_SITES
    with_gravity: bool = False
    gravity: float = 9.81

    def __post_init__(self):
        self.sites = tuple(int(s) for s in self.sites)
        if len(self.sites) != 6 or len(set(self.sites)) != 6:
            raise ValueError("exactly 6 distinct sites are required")
        if not all(0 <= s < N_JOINTS for s in self.sites):
            raise ValueError(f"site indices must be in [0, {N_JOINTS})")


@dataclass
class ImuSequence:
    fps: float
    site_names: list
    acc: np.ndarray          # (T, 6, 3) m/s^2, world frame
    ori: np.ndarray          # (T, 6, 3, 3) world frame
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.acc.shape[0]


def second_difference(p, fps: float) -> np.ndarray:
    """Acceleration of a (T, ...) trajectory: central differences inside,
    second-order one-sided differences at both ends (3-point for T=3)."""
    p = np.asarray(p, dtype=np.float64)
    T = p.shape[0]
    if T < 3:
        raise ValueError("need at least 3 frames")
    f2 = fps * fps
    a = np.empty_like(p)
    a[1:-1] = (p[2:] - 2.0 * p[1:-1] + p[:-2]) * f2
    if T >= 4:
        a[0] = (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * f2
        a[-1] = (2.0 * p[-1] - 5.0 * p[-2] + 4.0 * p[-3] - p[-4]) * f2
    else:
        a[0] = a[-1] = a[1]
    return a


def synthesize(skel: Skeleton, seq: PoseSequence, cfg: ImuConfig | None = None) -> ImuSequence:
    cfg = cfg or ImuConfig()
    if len(seq) < 3:
        raise ValueError("IMU synthesis needs at least 3 frames")
    pos, glob = fk_sequence(skel, seq)
    sites = list(cfg.sites)
    acc = second_difference(pos[:, sites], seq.fps)
    if cfg.with_gravity:
        acc = acc + cfg.gravity * skel.up_axis
    return ImuSequence(seq.fps, [skel.names[s] for s in sites], acc, glob[:, sites].copy(),
                       {"with_gravity": cfg.with_gravity})


def imu_to_dict(imu: ImuSequence) -> dict:
    six = rotmath.rot_to_sixd(imu.ori)
    return {
        "fps": imu.fps,
        "sites": list(imu.site_names),
        "frames": [{"acc": imu.acc[t].tolist(), "ori": six[t].tolist()} for t in range(len(imu))],
    }


def save_imu(imu: ImuSequence, path) -> None:
    write_json(imu_to_dict(imu), path)


def load_imu(path) -> ImuSequence:
    data = read_json(path)
    try:
        fps = float(data["fps"])
        names = list(data["sites"])
        acc = np.asarray([f["acc"] for f in data["frames"]], dtype=np.float64)
        six = np.asarray([f["ori"] for f in data["frames"]], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, "frames", f"malformed IMU file: {exc}") from exc
    if len(names) != 6 or acc.shape[1:] != (6, 3) or six.shape[1:] != (6, 6):
        raise FormatError(path, "frames", "expected 6 sites with 3-vector acc and 6D ori per frame")
    try:
        ori = rotmath.sixd_to_rot(six)
    except DegenerateRotationError as exc:
        raise FormatError(path, "frames.ori", str(exc)) from exc
    return ImuSequence(fps, names, acc, ori)
