# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-axis convolution kernels.

Must agree with fallback.py to float32 round-off; accumulation happens in
double precision, outputs are float32.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv1d_forward(cnp.ndarray x_arr, cnp.ndarray k_arr, int stride, int left_pad, int t_out):
    cdef cnp.float32_t[:, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] k = np.ascontiguousarray(k_arr, dtype=np.float32)
    cdef int t_in = x.shape[0]
    cdef int d_in = x.shape[1]
    cdef int w = k.shape[0]
    cdef int d_out = k.shape[2]
    out_arr = np.zeros((t_out, d_out), dtype=np.float32)
    cdef cnp.float32_t[:, ::1] out = out_arr
    cdef int t, j, i, o, pos
    cdef double acc
    for t in range(t_out):
        for o in range(d_out):
            acc = 0.0
            for j in range(w):
                pos = t * stride - left_pad + j
                if pos < 0 or pos >= t_in:
                    continue
                for i in range(d_in):
                    acc += x[pos, i] * k[j, i, o]
            out[t, o] = <cnp.float32_t>acc
    return out_arr


def conv1d_input_grad(cnp.ndarray g_arr, cnp.ndarray k_arr, int stride, int left_pad, int t_in):
    cdef cnp.float32_t[:, ::1] g = np.ascontiguousarray(g_arr, dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] k = np.ascontiguousarray(k_arr, dtype=np.float32)
    cdef int t_out = g.shape[0]
    cdef int d_out = g.shape[1]
    cdef int w = k.shape[0]
    cdef int d_in = k.shape[1]
    gx_arr = np.zeros((t_in, d_in), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] gx = gx_arr
    cdef int t, j, i, o, pos
    cdef double go
    for t in range(t_out):
        for j in range(w):
            pos = t * stride - left_pad + j
            if pos < 0 or pos >= t_in:
                continue
            for o in range(d_out):
                go = g[t, o]
                for i in range(d_in):
                    gx[pos, i] += go * k[j, i, o]
    return gx_arr.astype(np.float32)


def conv1d_kernel_grad(cnp.ndarray x_arr, cnp.ndarray g_arr, int w, int stride, int left_pad):
    cdef cnp.float32_t[:, ::1] x = np.ascontiguousarray(x_arr, dtype=np.float32)
    cdef cnp.float32_t[:, ::1] g = np.ascontiguousarray(g_arr, dtype=np.float32)
    cdef int t_in = x.shape[0]
    cdef int d_in = x.shape[1]
    cdef int t_out = g.shape[0]
    cdef int d_out = g.shape[1]
    gk_arr = np.zeros((w, d_in, d_out), dtype=np.float64)
    cdef cnp.float64_t[:, :, ::1] gk = gk_arr
    cdef int t, j, i, o, pos
    cdef double go
    for t in range(t_out):
        for j in range(w):
            pos = t * stride - left_pad + j
            if pos < 0 or pos >= t_in:
                continue
            for o in range(d_out):
                go = g[t, o]
                for i in range(d_in):
                    gk[j, i, o] += x[pos, i] * go
    return gk_arr.astype(np.float32)
