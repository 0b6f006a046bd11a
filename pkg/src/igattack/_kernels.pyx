# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense forward/backward sweeps (same contract as ``_pykernels``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

DEF IDENTITY = 0
DEF RELU = 1
DEF LEAKY_RELU = 2
DEF SOFTMAX = 3


cdef void _affine(const double[:, ::1] W, const double[::1] b,
                  const double[:, ::1] h, double[:, ::1] z) noexcept nogil:
    cdef Py_ssize_t rows = h.shape[0], n_out = W.shape[0], n_in = W.shape[1]
    cdef Py_ssize_t r, o, i
    cdef double acc
    for r in range(rows):
        for o in range(n_out):
            acc = 0.0
            for i in range(n_in):
                acc += W[o, i] * h[r, i]
            z[r, o] = acc + b[o]


cdef void _softmax_inplace(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1]
    cdef Py_ssize_t r, c
    cdef double mx, total
    for r in range(rows):
        mx = a[r, 0]
        for c in range(1, cols):
            if a[r, c] > mx:
                mx = a[r, c]
        total = 0.0
        for c in range(cols):
            a[r, c] = exp(a[r, c] - mx)
            total += a[r, c]
        for c in range(cols):
            a[r, c] = a[r, c] / total


cdef void _activate(const double[:, ::1] z, double[:, ::1] out,
                    int act, double slope) noexcept nogil:
    cdef Py_ssize_t rows = z.shape[0], cols = z.shape[1]
    cdef Py_ssize_t r, c
    cdef double v
    for r in range(rows):
        for c in range(cols):
            v = z[r, c]
            if act == RELU:
                out[r, c] = v if v > 0.0 else 0.0
            elif act == LEAKY_RELU:
                out[r, c] = v if v > 0.0 else slope * v
            else:
                out[r, c] = v
    if act == SOFTMAX:
        _softmax_inplace(out)


def forward(layers, X):
    cdef const double[:, ::1] h = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] z
    cdef double[:, ::1] a
    cdef Py_ssize_t rows = h.shape[0]
    cdef int act
    cdef double slope
    pre = []
    out = np.asarray(h)
    for W, b, act, slope in layers:
        z_arr = np.empty((rows, W.shape[0]), dtype=np.float64)
        z = z_arr
        _affine(W, b, h, z)
        pre.append(z_arr)
        if act == IDENTITY:
            out = z_arr
        else:
            out = np.empty_like(z_arr)
            a = out
            _activate(z, a, act, slope)
        h = out
    return out, pre


def backward(layers, pre, G):
    cdef double[:, ::1] g = np.array(G, dtype=np.float64, order="C")
    cdef const double[:, ::1] z
    cdef const double[:, ::1] W
    cdef double[:, ::1] gin
    cdef Py_ssize_t rows = g.shape[0]
    cdef Py_ssize_t r, o, i, n_out, n_in
    cdef int act
    cdef double slope, v, dot, gv
    cdef double[:, ::1] s
    for k in range(len(layers) - 1, -1, -1):
        W_arr, _b, act, slope = layers[k]
        W = W_arr
        z = pre[k]
        n_out = W.shape[0]
        n_in = W.shape[1]
        if act == RELU:
            for r in range(rows):
                for o in range(n_out):
                    if not z[r, o] > 0.0:
                        g[r, o] = 0.0
        elif act == LEAKY_RELU:
            for r in range(rows):
                for o in range(n_out):
                    if z[r, o] < 0.0:
                        g[r, o] = slope * g[r, o]
        elif act == SOFTMAX:
            s_arr = np.array(pre[k], dtype=np.float64, order="C")
            s = s_arr
            _softmax_inplace(s)
            for r in range(rows):
                dot = 0.0
                for o in range(n_out):
                    dot += g[r, o] * s[r, o]
                for o in range(n_out):
                    g[r, o] = s[r, o] * (g[r, o] - dot)
        gin_arr = np.zeros((rows, n_in), dtype=np.float64)
        gin = gin_arr
        with nogil:
            for r in range(rows):
                for o in range(n_out):
                    gv = g[r, o]
                    if gv != 0.0:
                        for i in range(n_in):
                            gin[r, i] += gv * W[o, i]
        g = gin
    return np.asarray(g)
