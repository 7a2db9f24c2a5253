# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the batched scalar kernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, fmax, fmin

cnp.import_array()

DEF MAX_NEWTON = 200
DEF MAX_BISECT = 200


def block_threshold(double[:, ::1] blocks, double th):
    cdef Py_ssize_t R = blocks.shape[0], L = blocks.shape[1], r, i
    cdef double s, lim = L * th
    out = np.empty(R)
    cdef double[::1] o = out
    for r in range(R):
        s = 0.0
        for i in range(L):
            s += blocks[r, i]
        o[r] = 1.0 if s >= lim else 0.0
    return out


cdef double _power_root(const double[:] w, const double[:] s, double budget) nogil:
    cdef Py_ssize_t L = w.shape[0], i, it
    cdef double t = 0.0, f, fp, d, step, ws
    f = -budget
    for i in range(L):
        f += w[i] * s[i]
    if f <= 0.0:
        return 0.0
    for it in range(MAX_NEWTON):
        f = -budget
        fp = 0.0
        for i in range(L):
            ws = w[i] * s[i]
            d = 1.0 + t * w[i]
            f += ws / (d * d)
            fp -= 2.0 * ws * w[i] / (d * d * d)
        if f <= 0.0:
            break
        step = -f / fp
        t += step
        if fabs(step) <= 1e-15 * fmax(1.0, t):
            break
    return t


def power_multipliers(weights, sq, double budget):
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] s = np.ascontiguousarray(sq, dtype=np.float64)
    cdef Py_ssize_t R = w.shape[0], r
    out = np.empty(R)
    cdef double[::1] o = out
    with nogil:
        for r in range(R):
            o[r] = _power_root(w[r], s[r], budget)
    return out


cdef double _box_g(const double[:] v0, const double[:] w, double nu, double bound) nogil:
    cdef Py_ssize_t i
    cdef double acc = -bound, q
    for i in range(v0.shape[0]):
        q = fmin(fmax(v0[i] - nu * w[i], 0.0), 1.0)
        acc += w[i] * q
    return acc


def box_halfspace_multipliers(v0, w, bound):
    cdef double[:, ::1] V = np.ascontiguousarray(v0, dtype=np.float64)
    cdef double[:, ::1] Wt = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t R = V.shape[0], r, it
    b_arr = np.array(np.broadcast_to(np.asarray(bound, dtype=np.float64), (R,)))
    cdef double[::1] b = b_arr
    out = np.zeros(R)
    cdef double[::1] o = out
    cdef double lo, hi, mid
    with nogil:
        for r in range(R):
            if _box_g(V[r], Wt[r], 0.0, b[r]) <= 0.0:
                continue
            lo = 0.0
            hi = 1.0
            for it in range(200):
                if _box_g(V[r], Wt[r], hi, b[r]) <= 0.0:
                    break
                hi *= 2.0
            for it in range(MAX_BISECT):
                mid = 0.5 * (lo + hi)
                if _box_g(V[r], Wt[r], mid, b[r]) > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-15 * fmax(1.0, hi):
                    break
            o[r] = hi
    return out
