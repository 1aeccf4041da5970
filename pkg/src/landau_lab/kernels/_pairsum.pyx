# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair sums. Same contract as ``_pairsum_py``; the outer loop runs
in parallel and each thread writes whole rows, so results are independent of
the thread count."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


def quad_pairs(const long[:, ::1] idx, const double[::1] s, const double[:, ::1] P,
               const double[::1] table, int nthreads=1):
    cdef Py_ssize_t n = s.shape[0], i, j
    cdef double[::1] out = np.zeros(n)
    cdef long dx, dy, dz, r2
    cdef double y0, y1, y2, yn, acc, t
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        acc = 0.0
        for j in range(n):
            dx = idx[j, 0] - idx[i, 0]
            dy = idx[j, 1] - idx[i, 1]
            dz = idx[j, 2] - idx[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 == 0:
                continue
            t = table[r2]
            y0 = s[j] * P[i, 0] - s[i] * P[j, 0]
            y1 = s[j] * P[i, 1] - s[i] * P[j, 1]
            y2 = s[j] * P[i, 2] - s[i] * P[j, 2]
            yn = (y0 * dx + y1 * dy + y2 * dz) / r2
            y0 = y0 - yn * dx
            y1 = y1 - yn * dy
            y2 = y2 - yn * dz
            acc = acc + t * (y0 * y0 + y1 * y1 + y2 * y2)
        out[i] = acc
    return np.asarray(out)


def bad_pairs(const long[:, ::1] idx, const double[:, ::1] U, const double[:, ::1] q,
              const double[::1] d, const double[::1] table, int nthreads=1):
    cdef Py_ssize_t n = d.shape[0], i, j
    cdef double[::1] out = np.zeros(n)
    cdef long dx, dy, dz, r2
    cdef double b0, b1, b2, un, bn, acc, t
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        acc = 0.0
        for j in range(n):
            dx = idx[j, 0] - idx[i, 0]
            dy = idx[j, 1] - idx[i, 1]
            dz = idx[j, 2] - idx[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 == 0:
                continue
            t = table[r2]
            b0 = (q[i, 0] - q[j, 0]) * d[j]
            b1 = (q[i, 1] - q[j, 1]) * d[j]
            b2 = (q[i, 2] - q[j, 2]) * d[j]
            un = U[i, 0] * dx + U[i, 1] * dy + U[i, 2] * dz
            bn = b0 * dx + b1 * dy + b2 * dz
            acc = acc + t * (U[i, 0] * b0 + U[i, 1] * b1 + U[i, 2] * b2 - un * bn / r2)
        out[i] = acc
    return np.asarray(out)


def j_pairs(const long[:, ::1] idx, const double[::1] W, const double[::1] w,
            const double[:, ::1] q, const double[::1] table, int nthreads=1):
    cdef Py_ssize_t n = W.shape[0], i, j
    cdef double[::1] out = np.zeros(n)
    cdef long dx, dy, dz, r2
    cdef double e0, e1, e2, en, acc, t
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        acc = 0.0
        for j in range(n):
            dx = idx[j, 0] - idx[i, 0]
            dy = idx[j, 1] - idx[i, 1]
            dz = idx[j, 2] - idx[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 == 0:
                continue
            t = table[r2]
            e0 = q[i, 0] - q[j, 0]
            e1 = q[i, 1] - q[j, 1]
            e2 = q[i, 2] - q[j, 2]
            en = (e0 * dx + e1 * dy + e2 * dz) / r2
            e0 = e0 - en * dx
            e1 = e1 - en * dy
            e2 = e2 - en * dz
            acc = acc + t * w[j] * (e0 * e0 + e1 * e1 + e2 * e2)
        out[i] = W[i] * acc
    return np.asarray(out)


def cross_pairs(const long[:, ::1] idx, const double[:, ::1] U, const double[::1] table,
                int nthreads=1):
    cdef Py_ssize_t n = U.shape[0], i, j
    cdef double[::1] out = np.zeros(n)
    cdef long dx, dy, dz, r2
    cdef double un, vn, acc, t
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        acc = 0.0
        for j in range(n):
            dx = idx[j, 0] - idx[i, 0]
            dy = idx[j, 1] - idx[i, 1]
            dz = idx[j, 2] - idx[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 == 0:
                continue
            t = table[r2]
            un = U[i, 0] * dx + U[i, 1] * dy + U[i, 2] * dz
            vn = U[j, 0] * dx + U[j, 1] * dy + U[j, 2] * dz
            acc = acc + t * (U[i, 0] * U[j, 0] + U[i, 1] * U[j, 1] + U[i, 2] * U[j, 2] - un * vn / r2)
        out[i] = acc
    return np.asarray(out)
