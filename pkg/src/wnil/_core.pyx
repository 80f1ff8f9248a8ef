# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for ball stencils, cone sums and direct kernel sums.

Every routine works on 2-D arrays; one-dimensional data is passed with a
leading axis of length one. The accumulation order matches the numpy
fallback in ``_pykernels`` term by term, so both backends return the same
bits for the stencil routines.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.intp_t idx


def stencil_sum(const f64[:, ::1] src, const idx[::1] cy, const idx[::1] cx,
                const idx[::1] oy, const idx[::1] ox):
    cdef Py_ssize_t nc = cy.shape[0], ns = oy.shape[0], i, k
    cdef f64 acc
    out = np.zeros(nc, dtype=np.float64)
    cdef f64[::1] o = out
    with nogil:
        for i in range(nc):
            acc = 0.0
            for k in range(ns):
                acc = acc + src[cy[i] + oy[k], cx[i] + ox[k]]
            o[i] = acc
    return out


def stencil_max(const f64[:, ::1] src, const idx[::1] cy, const idx[::1] cx,
                const idx[::1] oy, const idx[::1] ox):
    cdef Py_ssize_t nc = cy.shape[0], ns = oy.shape[0], i, k
    cdef f64 m, v
    out = np.empty(nc, dtype=np.float64)
    cdef f64[::1] o = out
    with nogil:
        for i in range(nc):
            m = -INFINITY
            for k in range(ns):
                v = src[cy[i] + oy[k], cx[i] + ox[k]]
                if v > m:
                    m = v
            o[i] = m
    return out


def scatter_max(f64[:, ::1] dst, cnp.int64_t[:, ::1] arg,
                const idx[::1] cy, const idx[::1] cx,
                const idx[::1] oy, const idx[::1] ox,
                const f64[::1] vals, const cnp.int64_t[::1] ids):
    """dst[c + o] = max(dst[c + o], vals[c]) over all centers and offsets.

    Ties keep the earlier ball, so the recorded argmax is the first ball in
    family order that attains the maximum.
    """
    cdef Py_ssize_t nc = cy.shape[0], ns = oy.shape[0], i, k, y, x
    cdef f64 v
    with nogil:
        for k in range(ns):
            for i in range(nc):
                v = vals[i]
                y = cy[i] + oy[k]
                x = cx[i] + ox[k]
                if v > dst[y, x]:
                    dst[y, x] = v
                    arg[y, x] = ids[i]


def offset_sum(const f64[:, ::1] src, const idx[::1] oy, const idx[::1] ox,
               const f64[::1] w):
    """out[i, j] = sum_k w[k] * src[i + oy[k], j + ox[k]], zero outside."""
    cdef Py_ssize_t ny = src.shape[0], nx = src.shape[1], ns = oy.shape[0]
    cdef Py_ssize_t i, j, k, y0, y1, x0, x1
    cdef f64 wk
    out = np.zeros((ny, nx), dtype=np.float64)
    cdef f64[:, ::1] o = out
    with nogil:
        for k in range(ns):
            wk = w[k]
            y0 = 0 if oy[k] >= 0 else -oy[k]
            y1 = ny - oy[k] if oy[k] >= 0 else ny
            x0 = 0 if ox[k] >= 0 else -ox[k]
            x1 = nx - ox[k] if ox[k] >= 0 else nx
            for i in range(y0, y1):
                for j in range(x0, x1):
                    o[i, j] = o[i, j] + wk * src[i + oy[k], j + ox[k]]
    return out


def toeplitz(const f64[:, ::1] f, const f64[:, ::1] st):
    """Direct sum out[i, j] = sum_{a, b} st[i - a + ny - 1, j - b + nx - 1] f[a, b]."""
    cdef Py_ssize_t ny = f.shape[0], nx = f.shape[1], i, j, a, b
    cdef f64 acc, v
    out = np.zeros((ny, nx), dtype=np.float64)
    cdef f64[:, ::1] o = out
    with nogil:
        for i in range(ny):
            for j in range(nx):
                acc = 0.0
                for a in range(ny):
                    for b in range(nx):
                        v = f[a, b]
                        if v != 0.0:
                            acc = acc + st[i - a + ny - 1, j - b + nx - 1] * v
                o[i, j] = acc
    return out
