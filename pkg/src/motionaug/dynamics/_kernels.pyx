# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree-dynamics kernels; same contract as ``_kernels_py``."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _crm(const double* v, const double* u, double* out) noexcept nogil:
    # [w x uw; w x u0 + v0 x uw]
    out[0] = v[1] * u[2] - v[2] * u[1]
    out[1] = v[2] * u[0] - v[0] * u[2]
    out[2] = v[0] * u[1] - v[1] * u[0]
    out[3] = v[1] * u[5] - v[2] * u[4] + v[4] * u[2] - v[5] * u[1]
    out[4] = v[2] * u[3] - v[0] * u[5] + v[5] * u[0] - v[3] * u[2]
    out[5] = v[0] * u[4] - v[1] * u[3] + v[3] * u[1] - v[4] * u[0]


cdef inline void _crf(const double* v, const double* f, double* out) noexcept nogil:
    # [w x fn + v0 x ff; w x ff]
    out[0] = v[1] * f[2] - v[2] * f[1] + v[4] * f[5] - v[5] * f[4]
    out[1] = v[2] * f[0] - v[0] * f[2] + v[5] * f[3] - v[3] * f[5]
    out[2] = v[0] * f[1] - v[1] * f[0] + v[3] * f[4] - v[4] * f[3]
    out[3] = v[1] * f[5] - v[2] * f[4]
    out[4] = v[2] * f[3] - v[0] * f[5]
    out[5] = v[0] * f[4] - v[1] * f[3]


cdef void _forward(const long[:] parent, const double[:, ::1] S, const double[:] qd, const double[:] qdd,
                   const double[:] a0, double[:, ::1] v, double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n = S.shape[0], k, i
    cdef long p
    cdef double vj[6]
    cdef double c[6]
    for k in range(n):
        p = parent[k]
        for i in range(6):
            vj[i] = S[k, i] * qd[k]
            if p >= 0:
                v[k, i] = v[p, i] + vj[i]
                a[k, i] = a[p, i] + S[k, i] * qdd[k]
            else:
                v[k, i] = vj[i]
                a[k, i] = a0[i] + S[k, i] * qdd[k]
        _crm(&v[k, 0], vj, c)
        for i in range(6):
            a[k, i] += c[i]


def forward_pass(parent, S, qd, qdd, a0):
    cdef long[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef double[:, ::1] s = np.ascontiguousarray(S, dtype=np.float64)
    n = s.shape[0]
    v = np.zeros((n, 6))
    a = np.zeros((n, 6))
    _forward(par, s, np.ascontiguousarray(qd, dtype=np.float64), np.ascontiguousarray(qdd, dtype=np.float64),
             np.ascontiguousarray(a0, dtype=np.float64), v, a)
    return v, a


def rnea(parent, S, inertia, qd, qdd, a0):
    cdef long[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef double[:, ::1] s = np.ascontiguousarray(S, dtype=np.float64)
    cdef double[:, :, ::1] I = np.ascontiguousarray(inertia, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0], k, i, j
    cdef long p
    v_arr = np.zeros((n, 6))
    a_arr = np.zeros((n, 6))
    f_arr = np.zeros((n, 6))
    tau_arr = np.zeros(n)
    cdef double[:, ::1] v = v_arr
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] f = f_arr
    cdef double[:] tau = tau_arr
    cdef double Iv[6]
    cdef double c[6]
    cdef double acc
    _forward(par, s, np.ascontiguousarray(qd, dtype=np.float64), np.ascontiguousarray(qdd, dtype=np.float64),
             np.ascontiguousarray(a0, dtype=np.float64), v, a)
    with nogil:
        for k in range(n):
            if I[k, 0, 0] == 0.0 and I[k, 5, 5] == 0.0:
                continue
            for i in range(6):
                acc = 0.0
                for j in range(6):
                    acc = acc + I[k, i, j] * v[k, j]
                Iv[i] = acc
            _crf(&v[k, 0], Iv, c)
            for i in range(6):
                acc = 0.0
                for j in range(6):
                    acc = acc + I[k, i, j] * a[k, j]
                f[k, i] = acc + c[i]
        for k in range(n - 1, -1, -1):
            acc = 0.0
            for i in range(6):
                acc = acc + s[k, i] * f[k, i]
            tau[k] = acc
            p = par[k]
            if p >= 0:
                for i in range(6):
                    f[p, i] += f[k, i]
    return tau_arr


def crba(parent, S, inertia):
    cdef long[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef double[:, ::1] s = np.ascontiguousarray(S, dtype=np.float64)
    Ic_arr = np.array(inertia, dtype=np.float64, order="C", copy=True)
    cdef double[:, :, ::1] Ic = Ic_arr
    cdef Py_ssize_t n = s.shape[0], k, i, j
    cdef long p, anc
    M_arr = np.zeros((n, n))
    cdef double[:, ::1] M = M_arr
    cdef double F[6]
    cdef double acc
    with nogil:
        for k in range(n - 1, 0, -1):
            p = par[k]
            if p >= 0:
                for i in range(6):
                    for j in range(6):
                        Ic[p, i, j] += Ic[k, i, j]
        for k in range(n):
            for i in range(6):
                acc = 0.0
                for j in range(6):
                    acc = acc + Ic[k, i, j] * s[k, j]
                F[i] = acc
            acc = 0.0
            for i in range(6):
                acc = acc + s[k, i] * F[i]
            M[k, k] = acc
            anc = par[k]
            while anc >= 0:
                acc = 0.0
                for i in range(6):
                    acc = acc + s[anc, i] * F[i]
                M[k, anc] = acc
                M[anc, k] = acc
                anc = par[anc]
    return M_arr
