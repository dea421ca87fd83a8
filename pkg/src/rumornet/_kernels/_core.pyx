# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-loop kernels: LSTM recurrence and 3x3xC valid convolution.

Contracts mirror ``pyref.py`` exactly; see that module for the shapes and
the gate layout.  Callers guarantee C-contiguous float64 inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

BACKEND = "cython"


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def lstm_forward(double[:, ::1] xw, double[:, ::1] w_rec):
    cdef Py_ssize_t p = xw.shape[0]
    cdef Py_ssize_t h4 = xw.shape[1]
    cdef Py_ssize_t hidden = h4 // 4
    h_arr = np.empty((p, hidden))
    c_arr = np.empty((p, hidden))
    g_arr = np.empty((p, h4))
    s_arr = np.empty(h4)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] gates = g_arr
    cdef double[::1] s = s_arr
    cdef Py_ssize_t t, j, k
    cdef double acc, gi, gf, go, gc, c_t, c_prev, hp
    with nogil:
        for t in range(p):
            for j in range(h4):
                acc = xw[t, j]
                if t > 0:
                    for k in range(hidden):
                        acc += h[t - 1, k] * w_rec[k, j]
                s[j] = acc
            for j in range(hidden):
                gi = _sigmoid(s[j])
                gf = _sigmoid(s[hidden + j])
                go = _sigmoid(s[2 * hidden + j])
                gc = tanh(s[3 * hidden + j])
                c_prev = c[t - 1, j] if t > 0 else 0.0
                c_t = gf * c_prev + gi * gc
                gates[t, j] = gi
                gates[t, hidden + j] = gf
                gates[t, 2 * hidden + j] = go
                gates[t, 3 * hidden + j] = gc
                c[t, j] = c_t
                h[t, j] = go * tanh(c_t)
    return h_arr, c_arr, g_arr


def lstm_backward(double[:, ::1] dh_out, double[:, ::1] h, double[:, ::1] c,
                  double[:, ::1] gates, double[:, ::1] w_rec):
    cdef Py_ssize_t p = h.shape[0]
    cdef Py_ssize_t hidden = h.shape[1]
    cdef Py_ssize_t h4 = 4 * hidden
    dxw_arr = np.empty((p, h4))
    dwrec_arr = np.zeros((hidden, h4))
    cdef double[:, ::1] dxw = dxw_arr
    cdef double[:, ::1] dw_rec = dwrec_arr
    dhn_arr = np.zeros(hidden)
    dcn_arr = np.zeros(hidden)
    cdef double[::1] dh_next = dhn_arr
    cdef double[::1] dc_next = dcn_arr
    cdef Py_ssize_t t, j, k
    cdef double gi, gf, go, gc, tc, dh, dc, c_prev, dgi, dgf, dgo, dgc, acc
    with nogil:
        for t in range(p - 1, -1, -1):
            for j in range(hidden):
                gi = gates[t, j]
                gf = gates[t, hidden + j]
                go = gates[t, 2 * hidden + j]
                gc = gates[t, 3 * hidden + j]
                tc = tanh(c[t, j])
                dh = dh_out[t, j] + dh_next[j]
                dgo = dh * tc
                dc = dh * go * (1.0 - tc * tc) + dc_next[j]
                c_prev = c[t - 1, j] if t > 0 else 0.0
                dgi = dc * gc
                dgf = dc * c_prev
                dgc = dc * gi
                dc_next[j] = dc * gf
                dxw[t, j] = dgi * gi * (1.0 - gi)
                dxw[t, hidden + j] = dgf * gf * (1.0 - gf)
                dxw[t, 2 * hidden + j] = dgo * go * (1.0 - go)
                dxw[t, 3 * hidden + j] = dgc * (1.0 - gc * gc)
            if t > 0:
                for k in range(hidden):
                    for j in range(h4):
                        dw_rec[k, j] += h[t - 1, k] * dxw[t, j]
            for k in range(hidden):
                acc = 0.0
                for j in range(h4):
                    acc += dxw[t, j] * w_rec[k, j]
                dh_next[k] = acc
    return dxw_arr, dwrec_arr


def conv3x3_forward(double[:, :, ::1] cube, double[:, :, :, ::1] filters, double[::1] biases):
    cdef Py_ssize_t a = cube.shape[0]
    cdef Py_ssize_t b = cube.shape[1]
    cdef Py_ssize_t depth = cube.shape[2]
    cdef Py_ssize_t m = filters.shape[0]
    cdef Py_ssize_t rows = a - 2
    cdef Py_ssize_t cols = b - 2
    out_arr = np.empty((m, rows, cols))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t f, x, y, i, j, ch
    cdef double acc
    with nogil:
        for f in range(m):
            for x in range(rows):
                for y in range(cols):
                    acc = biases[f]
                    for i in range(3):
                        for j in range(3):
                            for ch in range(depth):
                                acc += filters[f, i, j, ch] * cube[x + i, y + j, ch]
                    out[f, x, y] = acc if acc > 0.0 else 0.0
    return out_arr


def conv3x3_backward(double[:, :, ::1] dout, double[:, :, ::1] out,
                     double[:, :, ::1] cube, double[:, :, :, ::1] filters):
    cdef Py_ssize_t m = dout.shape[0]
    cdef Py_ssize_t rows = dout.shape[1]
    cdef Py_ssize_t cols = dout.shape[2]
    cdef Py_ssize_t depth = cube.shape[2]
    dcube_arr = np.zeros((cube.shape[0], cube.shape[1], depth))
    dfilt_arr = np.zeros((m, 3, 3, depth))
    dbias_arr = np.zeros(m)
    cdef double[:, :, ::1] dcube = dcube_arr
    cdef double[:, :, :, ::1] dfilters = dfilt_arr
    cdef double[::1] dbiases = dbias_arr
    cdef Py_ssize_t f, x, y, i, j, ch
    cdef double g
    with nogil:
        for f in range(m):
            for x in range(rows):
                for y in range(cols):
                    if out[f, x, y] <= 0.0:
                        continue
                    g = dout[f, x, y]
                    dbiases[f] += g
                    for i in range(3):
                        for j in range(3):
                            for ch in range(depth):
                                dfilters[f, i, j, ch] += g * cube[x + i, y + j, ch]
                                dcube[x + i, y + j, ch] += g * filters[f, i, j, ch]
    return dcube_arr, dfilt_arr, dbias_arr
