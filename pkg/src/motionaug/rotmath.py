"""Rotation representations and conversions.

Three representations are used across the package:

* 3x3 rotation matrices (the canonical form),
* 6D vectors holding the first two matrix columns, ``(R[:,0], R[:,1])``,
* Euler angles in the intrinsic X-Y-Z convention, ``R = Rx(a) @ Ry(b) @ Rz(c)``.

All functions accept arbitrary leading batch dimensions.
"""
from __future__ import annotations

import numpy as np

GIMBAL_EPS = 1e-6
DEGENERATE_EPS = 1e-12
_PASS_TOL = 1e-15


class DegenerateRotationError(ValueError):
    """Raised when a 6D vector cannot be orthonormalized."""


def _as_float(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def sixd_to_rot(r) -> np.ndarray:
    """Gram-Schmidt a 6D vector (..., 6) into a rotation matrix (..., 3, 3)."""
    r = _as_float(r)
    if r.shape[-1] != 6:
        raise ValueError(f"expected trailing dimension 6, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise DegenerateRotationError("6D rotation contains non-finite values")
    a1, a2 = r[..., :3], r[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 <= DEGENERATE_EPS):
        raise DegenerateRotationError("first 6D column has near-zero norm")
    b1 = a1 / n1
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 <= DEGENERATE_EPS * np.maximum(1.0, np.linalg.norm(a2, axis=-1, keepdims=True))):
        raise DegenerateRotationError("6D columns are near-parallel or second column is zero")
    b2 = u2 / n2
    # columns orthonormal to rounding pass through untouched: makes the
    # 6D -> matrix -> 6D round trip a bitwise fixed point
    exact = (
        (np.abs(np.sum(a1 * a1, axis=-1, keepdims=True) - 1.0) < _PASS_TOL)
        & (np.abs(np.sum(a2 * a2, axis=-1, keepdims=True) - 1.0) < _PASS_TOL)
        & (np.abs(np.sum(a1 * a2, axis=-1, keepdims=True)) < _PASS_TOL)
    )
    b1 = np.where(exact, a1, b1)
    b2 = np.where(exact, a2, b2)
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def rot_to_sixd(R) -> np.ndarray:
    R = _as_float(R)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def renormalize_sixd(r) -> np.ndarray:
    return rot_to_sixd(sixd_to_rot(r))


def rot_x(a) -> np.ndarray:
    a = _as_float(a)
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([o, z, z], -1), np.stack([z, c, -s], -1), np.stack([z, s, c], -1)], -2)


def rot_y(a) -> np.ndarray:
    a = _as_float(a)
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


def rot_z(a) -> np.ndarray:
    a = _as_float(a)
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def euler_to_rot(e) -> np.ndarray:
    """Intrinsic X-Y-Z Euler angles (..., 3) to rotation matrices."""
    e = _as_float(e)
    return rot_x(e[..., 0]) @ rot_y(e[..., 1]) @ rot_z(e[..., 2])


def rot_to_euler(R, return_flags: bool = False):
    """Inverse of :func:`euler_to_rot`.

    The middle angle lies in [-pi/2, pi/2]. When ``|cos(middle)| < 1e-6`` the
    decomposition is not unique; the third angle is set to zero and the
    corresponding entry of the returned flag array is True.
    """
    R = _as_float(R)
    sb = np.clip(R[..., 0, 2], -1.0, 1.0)
    b = np.arcsin(sb)
    cb = np.sqrt(np.maximum(0.0, 1.0 - sb * sb))
    locked = cb < GIMBAL_EPS
    a = np.arctan2(-R[..., 1, 2], R[..., 2, 2])
    c = np.arctan2(-R[..., 0, 1], R[..., 0, 0])
    # gimbal lock: R = Rx(a) Ry(+-pi/2); rows 1,2 of column 1 give a directly
    a_locked = np.arctan2(R[..., 2, 1], R[..., 1, 1])
    a = np.where(locked, a_locked, a)
    c = np.where(locked, 0.0, c)
    e = wrap_angle(np.stack([a, b, c], axis=-1))
    if return_flags:
        return e, locked
    return e


def wrap_angle(x) -> np.ndarray:
    """Wrap angles into (-pi, pi]."""
    x = _as_float(x)
    y = np.mod(x + np.pi, 2.0 * np.pi) - np.pi
    return np.where(y == -np.pi, np.pi, y)


def axis_angle_to_rot(v) -> np.ndarray:
    """Rodrigues formula for rotation vectors (..., 3)."""
    v = _as_float(v)
    theta = np.linalg.norm(v, axis=-1)[..., None, None]
    k = v / np.where(theta[..., 0] > 0, theta[..., 0], 1.0)
    K = skew(k)
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def skew(v) -> np.ndarray:
    v = _as_float(v)
    z = np.zeros_like(v[..., 0])
    return np.stack(
        [
            np.stack([z, -v[..., 2], v[..., 1]], -1),
            np.stack([v[..., 2], z, -v[..., 0]], -1),
            np.stack([-v[..., 1], v[..., 0], z], -1),
        ],
        -2,
    )


def geodesic_deg(Ra, Rb) -> np.ndarray:
    """Angle of ``Ra^T Rb`` in degrees, in [0, 180]."""
    Ra, Rb = _as_float(Ra), _as_float(Rb)
    rel = np.swapaxes(Ra, -1, -2) @ Rb
    tr = np.trace(rel, axis1=-2, axis2=-1)
    # arccos loses precision near 0 and 180; use atan2 of the skew part instead
    w = np.stack(
        [rel[..., 2, 1] - rel[..., 1, 2], rel[..., 0, 2] - rel[..., 2, 0], rel[..., 1, 0] - rel[..., 0, 1]],
        axis=-1,
    )
    s = 0.5 * np.linalg.norm(w, axis=-1)
    c = 0.5 * (tr - 1.0)
    return np.degrees(np.clip(np.arctan2(s, c), 0.0, np.pi))


def is_rotation(R, tol: float = 1e-9) -> bool:
    R = _as_float(R)
    eye = np.eye(3)
    ortho = np.abs(np.swapaxes(R, -1, -2) @ R - eye).max() <= tol
    det = np.abs(np.linalg.det(R) - 1.0).max() <= tol
    return bool(ortho and det)


def random_rotations(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniformly distributed rotations (via normalized Gaussian quaternions)."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return quat_to_rot(q)


def quat_to_rot(q) -> np.ndarray:
    q = _as_float(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], -1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], -1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], -1),
        ],
        -2,
    )


def rot_to_quat(R) -> np.ndarray:
    """Rotation matrices to unit quaternions (w, x, y, z), w >= 0."""
    R = _as_float(R)
    shape = R.shape[:-2]
    R = R.reshape(-1, 3, 3)
    # symmetric 4x4 whose top eigenvector is the quaternion (Bar-Itzhack)
    K = np.empty((R.shape[0], 4, 4))
    K[:, 0, 0] = R[:, 0, 0] + R[:, 1, 1] + R[:, 2, 2]
    K[:, 1, 1] = R[:, 0, 0] - R[:, 1, 1] - R[:, 2, 2]
    K[:, 2, 2] = -R[:, 0, 0] + R[:, 1, 1] - R[:, 2, 2]
    K[:, 3, 3] = -R[:, 0, 0] - R[:, 1, 1] + R[:, 2, 2]
    K[:, 0, 1] = K[:, 1, 0] = R[:, 2, 1] - R[:, 1, 2]
    K[:, 0, 2] = K[:, 2, 0] = R[:, 0, 2] - R[:, 2, 0]
    K[:, 0, 3] = K[:, 3, 0] = R[:, 1, 0] - R[:, 0, 1]
    K[:, 1, 2] = K[:, 2, 1] = R[:, 1, 0] + R[:, 0, 1]
    K[:, 1, 3] = K[:, 3, 1] = R[:, 0, 2] + R[:, 2, 0]
    K[:, 2, 3] = K[:, 3, 2] = R[:, 2, 1] + R[:, 1, 2]
    _, vecs = np.linalg.eigh(K / 3.0)
    q = vecs[:, :, -1]
    q = q * np.where(q[:, :1] < 0, -1.0, 1.0)
    return q.reshape(shape + (4,))


def chordal_mean(Rs, axis: int = 0) -> np.ndarray:
    """Quaternion eigen-average of rotations along ``axis``."""
    q = rot_to_quat(np.moveaxis(_as_float(Rs), axis, 0))
    A = np.einsum("n...i,n...j->...ij", q, q)
    _, vecs = np.linalg.eigh(A)
    return quat_to_rot(vecs[..., :, -1])
