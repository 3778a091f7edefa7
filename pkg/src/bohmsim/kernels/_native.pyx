# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched cubic interpolation and tridiagonal solves.

Mirrors kernels.reference exactly; see that module for the contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, fmod

cnp.import_array()

BACKEND = "native"


cdef inline void _weights(double u, double* w) nogil:
    w[0] = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w[1] = u * (u - 2.0) * (u - 3.0) / 2.0
    w[2] = -u * (u - 1.0) * (u - 3.0) / 2.0
    w[3] = u * (u - 1.0) * (u - 2.0) / 6.0


cdef inline Py_ssize_t _wrap(Py_ssize_t idx, Py_ssize_t n) nogil:
    # cdivision gives C semantics for %, so wrap negatives by hand
    idx = idx % n
    if idx < 0:
        idx += n
    return idx


cdef inline Py_ssize_t _start_1d(double x, double lo, double h, bint periodic,
                                 Py_ssize_t n, double* u) nogil:
    cdef double s = (x - lo) / h
    cdef Py_ssize_t i1, start
    if periodic:
        s = fmod(s, <double>n)
        if s < 0.0:
            s += <double>n
        i1 = <Py_ssize_t>floor(s)
        if i1 > n - 1:
            i1 = n - 1
        start = i1 - 1
    else:
        i1 = <Py_ssize_t>floor(s)
        if i1 < 0:
            i1 = 0
        elif i1 > n - 2:
            i1 = n - 2
        start = i1 - 1
        if start < 0:
            start = 0
        elif start > n - 4:
            start = n - 4
    u[0] = s - <double>start
    return start


def interp_cubic_1d(cnp.ndarray values_in, double lo, double h, bint periodic,
                    cnp.ndarray xq_in):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] values = \
        np.ascontiguousarray(values_in, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xq = \
        np.ascontiguousarray(xq_in, dtype=np.float64)
    cdef Py_ssize_t n = values.shape[0], m = xq.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = \
        np.empty(m, dtype=np.complex128)
    cdef Py_ssize_t j, k, start, idx
    cdef double u
    cdef double w[4]
    cdef double complex acc
    with nogil:
        for j in range(m):
            start = _start_1d(xq[j], lo, h, periodic, n, &u)
            _weights(u, w)
            acc = 0
            for k in range(4):
                idx = start + k
                if periodic:
                    idx = _wrap(idx, n)
                acc = acc + w[k] * values[idx]
            out[j] = acc
    return out


def interp_cubic_2d(cnp.ndarray values_in, double lo0, double h0, bint per0,
                    double lo1, double h1, bint per1,
                    cnp.ndarray xq_in, cnp.ndarray yq_in):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] values = \
        np.ascontiguousarray(values_in, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xq = \
        np.ascontiguousarray(xq_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yq = \
        np.ascontiguousarray(yq_in, dtype=np.float64)
    cdef Py_ssize_t n0 = values.shape[0], n1 = values.shape[1], m = xq.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = \
        np.empty(m, dtype=np.complex128)
    cdef Py_ssize_t j, a, b, s0, s1, i0, i1
    cdef double u0, u1
    cdef double w0[4]
    cdef double w1[4]
    cdef double complex acc, row
    with nogil:
        for j in range(m):
            s0 = _start_1d(xq[j], lo0, h0, per0, n0, &u0)
            s1 = _start_1d(yq[j], lo1, h1, per1, n1, &u1)
            _weights(u0, w0)
            _weights(u1, w1)
            acc = 0
            for a in range(4):
                i0 = s0 + a
                if per0:
                    i0 = _wrap(i0, n0)
                row = 0
                for b in range(4):
                    i1 = s1 + b
                    if per1:
                        i1 = _wrap(i1, n1)
                    row = row + w1[b] * values[i0, i1]
                acc = acc + w0[a] * row
            out[j] = acc
    return out


def thomas_solve(cnp.ndarray dl_in, cnp.ndarray d_in, cnp.ndarray du_in,
                 cnp.ndarray rhs_in):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] dl = \
        np.ascontiguousarray(dl_in, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] d = \
        np.ascontiguousarray(d_in, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] du = \
        np.ascontiguousarray(du_in, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] rhs = \
        np.ascontiguousarray(rhs_in, dtype=np.complex128)
    cdef Py_ssize_t b = rhs.shape[0], n = rhs.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] cp = \
        np.empty((b, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] x = \
        np.empty((b, n), dtype=np.complex128)
    cdef Py_ssize_t i, r
    cdef double complex denom
    with nogil:
        for r in range(b):
            cp[r, 0] = du[r, 0] / d[r, 0]
            x[r, 0] = rhs[r, 0] / d[r, 0]
            for i in range(1, n):
                denom = d[r, i] - dl[r, i] * cp[r, i - 1]
                cp[r, i] = du[r, i] / denom
                x[r, i] = (rhs[r, i] - dl[r, i] * x[r, i - 1]) / denom
            for i in range(n - 2, -1, -1):
                x[r, i] = x[r, i] - cp[r, i] * x[r, i + 1]
    return x
