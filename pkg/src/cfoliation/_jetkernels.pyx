# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled truncated Leibniz product (same contract as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef inline void _leibniz(const double* x, const double* y, double* out,
                          Py_ssize_t n, int order) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t o1 = 1, o2 = 1 + n, o3 = 1 + n + n * n
    cdef double x0 = x[0], y0 = y[0]
    cdef double xi, yi, xj, yj
    out[0] = x0 * y0
    if order < 1:
        return
    for i in range(n):
        out[o1 + i] = x[o1 + i] * y0 + x0 * y[o1 + i]
    if order < 2:
        return
    for i in range(n):
        xi = x[o1 + i]
        yi = y[o1 + i]
        for j in range(n):
            out[o2 + i * n + j] = (x[o2 + i * n + j] * y0 + x0 * y[o2 + i * n + j]
                                   + xi * y[o1 + j] + x[o1 + j] * yi)
    if order < 3:
        return
    for i in range(n):
        xi = x[o1 + i]
        yi = y[o1 + i]
        for j in range(n):
            xj = x[o1 + j]
            yj = y[o1 + j]
            for k in range(n):
                out[o3 + (i * n + j) * n + k] = (
                    x[o3 + (i * n + j) * n + k] * y0
                    + x0 * y[o3 + (i * n + j) * n + k]
                    + x[o2 + i * n + j] * y[o1 + k]
                    + x[o2 + i * n + k] * yj
                    + x[o2 + j * n + k] * yi
                    + xi * y[o2 + j * n + k]
                    + xj * y[o2 + i * n + k]
                    + x[o1 + k] * y[o2 + i * n + j])


def _rows(const double[:, ::1] a, const double[:, ::1] b, Py_ssize_t n, int order):
    cdef Py_ssize_t rows = a.shape[0], K = a.shape[1], r
    out = np.empty((rows, K), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for r in range(rows):
            _leibniz(&a[r, 0], &b[r, 0], &o[r, 0], n, order)
    return out


def _outer(const double[:, ::1] a, const double[:, ::1] b, Py_ssize_t n, int order):
    cdef Py_ssize_t A = a.shape[0], B = b.shape[0], K = a.shape[1], r, s
    out = np.empty((A, B, K), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    with nogil:
        for r in range(A):
            for s in range(B):
                _leibniz(&a[r, 0], &b[s, 0], &o[r, s, 0], n, order)
    return out


def mul(a, b, n, order):
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    K = shape[a.ndim - 1]
    a2 = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, K)
    b2 = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, K)
    return _rows(a2, b2, n, order).reshape(shape)


def mul_outer(a, b, n, order):
    return _outer(np.ascontiguousarray(a, dtype=np.float64),
                  np.ascontiguousarray(b, dtype=np.float64), n, order)
