"""NumPy implementation of the tree-dynamics kernels.

All quantities are spatial 6-vectors ``[angular; linear]`` expressed in the
world frame at the world origin. Each degree of freedom is a 1-DoF joint with
world-frame axis ``S[k]``; ``parent[k] < k`` (or -1 for the base).
``inertia[k]`` is the world-frame spatial inertia of the body carried by DoF
``k`` (all zeros for massless intermediate links).
"""
from __future__ import annotations

import numpy as np


def _crm(v, u):
    """Motion cross product ``v x u``."""
    w, v0 = v[:3], v[3:]
    uw, u0 = u[:3], u[3:]
    return np.concatenate([np.cross(w, uw), np.cross(w, u0) + np.cross(v0, uw)])


def _crf(v, f):
    """Force cross product ``v x* f``."""
    w, v0 = v[:3], v[3:]
    fn, ff = f[:3], f[3:]
    return np.concatenate([np.cross(w, fn) + np.cross(v0, ff), np.cross(w, ff)])


def forward_pass(parent, S, qd, qdd, a0):
    """Spatial velocities and accelerations of every DoF body."""
    n = S.shape[0]
    v = np.zeros((n, 6))
    a = np.zeros((n, 6))
    for k in range(n):
        p = parent[k]
        vp = v[p] if p >= 0 else np.zeros(6)
        ap = a[p] if p >= 0 else a0
        vj = S[k] * qd[k]
        v[k] = vp + vj
        a[k] = ap + S[k] * qdd[k] + _crm(v[k], vj)
    return v, a


def rnea(parent, S, inertia, qd, qdd, a0):
    """Recursive Newton-Euler inverse dynamics."""
    n = S.shape[0]
    v, a = forward_pass(parent, S, qd, qdd, a0)
    f = np.zeros((n, 6))
    for k in range(n):
        I = inertia[k]
        if I[5, 5] != 0.0 or I[0, 0] != 0.0:
            f[k] = I @ a[k] + _crf(v[k], I @ v[k])
    tau = np.zeros(n)
    for k in range(n - 1, -1, -1):
        tau[k] = S[k] @ f[k]
        p = parent[k]
        if p >= 0:
            f[p] += f[k]
    return tau


def crba(parent, S, inertia):
    """Composite-rigid-body joint-space inertia matrix."""
    n = S.shape[0]
    Ic = np.array(inertia, dtype=np.float64, copy=True)
    for k in range(n - 1, 0, -1):
        p = parent[k]
        if p >= 0:
            Ic[p] += Ic[k]
    M = np.zeros((n, n))
    for k in range(n):
        F = Ic[k] @ S[k]
        M[k, k] = S[k] @ F
        j = parent[k]
        while j >= 0:
            M[k, j] = M[j, k] = S[j] @ F
            j = parent[j]
    return M
