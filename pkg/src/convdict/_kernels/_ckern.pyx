# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled correlation kernels.  Same contract as _pykern."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def corr2d(double[:, ::1] x, double[:, ::1] f):
    cdef Py_ssize_t kh = f.shape[0], kw = f.shape[1]
    cdef Py_ssize_t oh = x.shape[0] - kh + 1, ow = x.shape[1] - kw + 1
    out_arr = np.empty((oh, ow))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, u, v
    cdef double acc
    with nogil:
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for u in range(kh):
                    for v in range(kw):
                        acc += x[i + u, j + v] * f[u, v]
                out[i, j] = acc
    return out_arr


def conv_forward(double[:, :, ::1] x, double[:, :, :, ::1] w):
    cdef Py_ssize_t cin = x.shape[0], cout = w.shape[0]
    cdef Py_ssize_t kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = x.shape[1] - kh + 1, ow = x.shape[2] - kw + 1
    out_arr = np.zeros((cout, oh, ow))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t o, c, i, j, u, v
    cdef double acc
    with nogil:
        for o in range(cout):
            for c in range(cin):
                for i in range(oh):
                    for j in range(ow):
                        acc = 0.0
                        for u in range(kh):
                            for v in range(kw):
                                acc += x[c, i + u, j + v] * w[o, c, u, v]
                        out[o, i, j] += acc
    return out_arr


def conv_grad_w(double[:, :, ::1] x, double[:, :, ::1] gy):
    cdef Py_ssize_t cin = x.shape[0], cout = gy.shape[0]
    cdef Py_ssize_t oh = gy.shape[1], ow = gy.shape[2]
    cdef Py_ssize_t kh = x.shape[1] - oh + 1, kw = x.shape[2] - ow + 1
    out_arr = np.zeros((cout, cin, kh, kw))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t o, c, u, v, i, j
    cdef double acc
    with nogil:
        for o in range(cout):
            for c in range(cin):
                for u in range(kh):
                    for v in range(kw):
                        acc = 0.0
                        for i in range(oh):
                            for j in range(ow):
                                acc += x[c, u + i, v + j] * gy[o, i, j]
                        out[o, c, u, v] = acc
    return out_arr


def conv_grad_x(double[:, :, :, ::1] w, double[:, :, ::1] gy):
    cdef Py_ssize_t cout = w.shape[0], cin = w.shape[1]
    cdef Py_ssize_t kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = gy.shape[1], ow = gy.shape[2]
    cdef Py_ssize_t h = oh + kh - 1, wdt = ow + kw - 1
    out_arr = np.zeros((cin, h, wdt))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t o, c, i, j, u, v, p, q
    cdef double g
    with nogil:
        for o in range(cout):
            for i in range(oh):
                for j in range(ow):
                    g = gy[o, i, j]
                    for c in range(cin):
                        for u in range(kh):
                            for v in range(kw):
                                out[c, i + u, j + v] += g * w[o, c, u, v]
    return out_arr
