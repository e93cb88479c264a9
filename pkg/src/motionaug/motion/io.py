"""JSON readers and writers for skeleton and motion files.

Skeleton file::

    {"name": "smpl24", "up_axis": [0, 1, 0],
     "joints": [{"name", "parent", "offset": [3], "mass", "com": [3], "inertia": [6]}, ...]}

Motion file (rotations as 6D, joints 1..23 in SMPL order)::

    {"fps": 60, "skeleton": "smpl24",
     "frames": [{"p_root": [3], "r_root": [6], "r_joints": [[6] x 23]}, ...]}

Floats are written with ``repr`` precision, so save -> load -> save is
byte-identical.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import rotmath
from .sequence import PoseSequence
from .skeleton import N_JOINTS, Skeleton, SkeletonError, default_skeleton

BUILTIN_SKELETONS = ("smpl24",)


class FormatError(ValueError):
    """Malformed skeleton/motion/IMU file. Carries the file and field path."""

    def __init__(self, path, field: str, message: str, line: int | None = None):
        self.path = str(path)
        self.field = field
        self.line = line
        where = f"{self.path}"
        if line is not None:
            where += f":{line}"
        if field:
            where += f" [{field}]"
        super().__init__(f"{where}: {message}")


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(path, "", f"cannot read file: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(path, "", f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def write_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n")


def _vec(path, field, value, n) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(path, field, "expected numbers") from exc
    if arr.shape != (n,):
        raise FormatError(path, field, f"expected {n} numbers, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError(path, field, "non-finite value")
    return arr


def _get(path, obj, key, field):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(path, field, f"missing key '{key}'")
    return obj[key]


def skeleton_to_dict(skel: Skeleton) -> dict:
    joints = []
    for i in range(skel.n_joints):
        joints.append({
            "name": skel.names[i],
            "parent": int(skel.parents[i]),
            "offset": skel.offsets[i].tolist(),
            "mass": float(skel.masses[i]),
            "com": skel.coms[i].tolist(),
            "inertia": skel.inertias[i].tolist(),
        })
    return {"name": skel.name, "up_axis": skel.up_axis.tolist(), "joints": joints}


def save_skeleton(skel: Skeleton, path) -> None:
    write_json(skeleton_to_dict(skel), path)


def load_skeleton(path) -> Skeleton:
    data = read_json(path)
    joints = _get(path, data, "joints", "joints")
    if not isinstance(joints, list):
        raise FormatError(path, "joints", "expected a list")
    if len(joints) != N_JOINTS:
        raise FormatError(path, "joints", f"joint count must be {N_JOINTS}, got {len(joints)}")
    names, parents, offsets, masses, coms, inertias = [], [], [], [], [], []
    for i, j in enumerate(joints):
        f = f"joints[{i}]"
        names.append(str(_get(path, j, "name", f + ".name")))
        parent = _get(path, j, "parent", f + ".parent")
        if not isinstance(parent, int):
            raise FormatError(path, f + ".parent", "expected an integer")
        parents.append(parent)
        offsets.append(_vec(path, f + ".offset", _get(path, j, "offset", f + ".offset"), 3))
        mass = _get(path, j, "mass", f + ".mass")
        if not isinstance(mass, (int, float)):
            raise FormatError(path, f + ".mass", "expected a number")
        masses.append(float(mass))
        coms.append(_vec(path, f + ".com", _get(path, j, "com", f + ".com"), 3))
        inertias.append(_vec(path, f + ".inertia", _get(path, j, "inertia", f + ".inertia"), 6))
    up = _vec(path, "up_axis", data.get("up_axis", [0.0, 1.0, 0.0]), 3)
    try:
        return Skeleton(names, parents, offsets, masses, coms, inertias, up, str(data.get("name", "smpl24")))
    except SkeletonError as exc:
        raise FormatError(path, "joints", str(exc)) from exc


def motion_to_dict(seq: PoseSequence) -> dict:
    six = rotmath.rot_to_sixd(seq.rots)
    frames = []
    for t in range(len(seq)):
        frames.append({
            "p_root": seq.p_root[t].tolist(),
            "r_root": six[t, 0].tolist(),
            "r_joints": six[t, 1:].tolist(),
        })
    return {"fps": seq.fps, "skeleton": seq.skeleton_name, "frames": frames}


def save_motion(seq: PoseSequence, path) -> None:
    write_json(motion_to_dict(seq), path)


def load_motion(path, skeleton: Skeleton | None = None) -> PoseSequence:
    """Read a motion file.

    The referenced skeleton must be built in or match ``skeleton.name``.
    """
    data = read_json(path)
    fps = _get(path, data, "fps", "fps")
    if not isinstance(fps, (int, float)) or not fps > 0:
        raise FormatError(path, "fps", "fps must be a positive number")
    skel_name = _get(path, data, "skeleton", "skeleton")
    known = set(BUILTIN_SKELETONS)
    if skeleton is not None:
        known = {skeleton.name}
    if skel_name not in known:
        raise FormatError(path, "skeleton", f"unknown skeleton '{skel_name}' (known: {sorted(known)})")
    frames = _get(path, data, "frames", "frames")
    if not isinstance(frames, list) or not frames:
        raise FormatError(path, "frames", "expected a non-empty list")
    T = len(frames)
    p = np.empty((T, 3))
    six = np.empty((T, N_JOINTS, 6))
    for t, fr in enumerate(frames):
        f = f"frames[{t}]"
        p[t] = _vec(path, f + ".p_root", _get(path, fr, "p_root", f + ".p_root"), 3)
        six[t, 0] = _vec(path, f + ".r_root", _get(path, fr, "r_root", f + ".r_root"), 6)
        rj = _get(path, fr, "r_joints", f + ".r_joints")
        if not isinstance(rj, list) or len(rj) != N_JOINTS - 1:
            raise FormatError(path, f + ".r_joints", f"expected {N_JOINTS - 1} rotations")
        for j, r in enumerate(rj):
            six[t, j + 1] = _vec(path, f"{f}.r_joints[{j}]", r, 6)
    try:
        rots = rotmath.sixd_to_rot(six)
    except rotmath.DegenerateRotationError as exc:
        raise FormatError(path, "frames", str(exc)) from exc
    return PoseSequence(p, rots, float(fps), skel_name)


def builtin_skeleton_path() -> Path:
    return Path(__file__).parent / "data" / "smpl24.skeleton.json"


def get_skeleton(path=None) -> Skeleton:
    """Load ``path`` or the shipped default skeleton."""
    if path is None:
        p = builtin_skeleton_path()
        return load_skeleton(p) if p.exists() else default_skeleton()
    return load_skeleton(path)
