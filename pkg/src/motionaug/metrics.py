"""Fidelity, diversity and smoothness metrics on pose sequences."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import rotmath
from .motion.sequence import PoseSequence, fk_sequence
from .motion.skeleton import Skeleton

SIP_JOINTS = (1, 2, 16, 17)


class MetricError(ValueError):
    pass


@dataclass
class FidelityReport:
    e_pos: float
    e_rot: float
    e_sip: float
    d_pos: float | None
    d_rot: float | None
    per_joint_e_pos: list
    per_joint_e_rot: list
    per_joint_d_pos: list | None
    per_joint_d_rot: list | None
    n_samples: int

    def as_dict(self) -> dict:
        return asdict(self)

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["joint", "e_pos_cm", "e_rot_deg", "d_pos_cm", "d_rot_deg"])
            for j in range(len(self.per_joint_e_pos)):
                dp = self.per_joint_d_pos[j] if self.per_joint_d_pos is not None else ""
                dr = self.per_joint_d_rot[j] if self.per_joint_d_rot is not None else ""
                w.writerow([j, self.per_joint_e_pos[j], self.per_joint_e_rot[j], dp, dr])
            w.writerow(["mean", self.e_pos, self.e_rot, "" if self.d_pos is None else self.d_pos,
                        "" if self.d_rot is None else self.d_rot])


def fidelity_from_global(gt_pos, gt_rot, aug_pos, aug_rot, sip_joints=SIP_JOINTS) -> FidelityReport:
    """Metrics from global joint positions (T, J, 3) and rotations (T, J, 3, 3);
    ``aug_*`` carry a leading sample axis."""
    gt_pos, gt_rot = np.asarray(gt_pos), np.asarray(gt_rot)
    aug_pos, aug_rot = np.asarray(aug_pos), np.asarray(aug_rot)
    if aug_pos.ndim != 4 or aug_pos.shape[0] < 1:
        raise MetricError("need at least one augmented sample")
    if aug_pos.shape[1:] != gt_pos.shape or aug_rot.shape[1:] != gt_rot.shape:
        raise MetricError(f"shape mismatch: ground truth {gt_pos.shape}, samples {aug_pos.shape[1:]}")
    K = aug_pos.shape[0]
    dist_cm = 100.0 * np.linalg.norm(aug_pos - gt_pos, axis=-1)      # (K, T, J)
    ang = rotmath.geodesic_deg(gt_rot, aug_rot)                        # (K, T, J)
    pj_pos = dist_cm.mean(axis=(0, 1))
    pj_rot = ang.mean(axis=(0, 1))
    sip = list(sip_joints)
    d_pos = d_rot = pj_dpos = pj_drot = None
    if K >= 2:
        centre = aug_pos.mean(axis=0)
        spread = np.sqrt(np.mean(np.sum((aug_pos - centre) ** 2, axis=-1), axis=0))   # (T, J)
        pj_dpos = 100.0 * spread.mean(axis=0)
        mean_rot = rotmath.chordal_mean(aug_rot, axis=0)
        pj_drot = rotmath.geodesic_deg(mean_rot, aug_rot).mean(axis=(0, 1))
        d_pos, d_rot = float(pj_dpos.mean()), float(pj_drot.mean())
        pj_dpos, pj_drot = pj_dpos.tolist(), pj_drot.tolist()
    return FidelityReport(
        e_pos=float(pj_pos.mean()), e_rot=float(pj_rot.mean()), e_sip=float(ang[..., sip].mean()),
        d_pos=d_pos, d_rot=d_rot, per_joint_e_pos=pj_pos.tolist(), per_joint_e_rot=pj_rot.tolist(),
        per_joint_d_pos=pj_dpos, per_joint_d_rot=pj_drot, n_samples=K,
    )


def fidelity(skel: Skeleton, gt: PoseSequence, augmented, sip_joints=SIP_JOINTS) -> FidelityReport:
    """Errors of each augmented sample against ground truth (positions in cm,
    rotations in degrees, all on global joint quantities) and the spread of
    the samples around their mean. Spread fields are ``None`` for one sample."""
    augmented = list(augmented)
    if not augmented:
        raise MetricError("need at least one augmented sample")
    for a in augmented:
        if len(a) != len(gt) or a.fps != gt.fps:
            raise MetricError("augmented sequences must match ground truth length and fps")
    gp, gr = fk_sequence(skel, gt)
    fk = [fk_sequence(skel, a) for a in augmented]
    return fidelity_from_global(gp, gr, np.stack([f[0] for f in fk]), np.stack([f[1] for f in fk]), sip_joints)


def jitter_from_positions(pos, fps: float) -> float:
    """Mean norm of the discrete third derivative, in units of 100 m/s^3.

    ``pos`` is (T, ..., 3); every point and every valid frame counts equally.
    """
    pos = np.asarray(pos, dtype=np.float64)
    if pos.shape[0] < 4:
        raise MetricError("jitter needs at least 4 frames")
    d3 = pos[3:] - 3.0 * pos[2:-1] + 3.0 * pos[1:-2] - pos[:-3]
    return float(np.linalg.norm(d3, axis=-1).mean() * fps ** 3 / 100.0)


def jitter(skel: Skeleton, seq: PoseSequence) -> float:
    pos, _ = fk_sequence(skel, seq)
    return jitter_from_positions(pos, seq.fps)
