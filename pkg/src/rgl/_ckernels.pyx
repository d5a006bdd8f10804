# cython: language_level=3
"""Compiled inner loops. Arithmetic order mirrors ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor

cnp.import_array()


def linear_solver_core(cnp.ndarray[double, ndim=1] x,
                       cnp.ndarray[double, ndim=1] w,
                       cnp.ndarray[cnp.int64_t, ndim=1] order,
                       cnp.ndarray[double, ndim=1] lower,
                       cnp.ndarray[double, ndim=1] upper,
                       double residual, double tol):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t d
    cdef double step, old, new
    cdef cnp.ndarray[double, ndim=1] out = x.copy()
    while fabs(residual) > tol and i < n:
        d = order[i]
        step = -residual / w[d]
        old = out[d]
        new = old + step
        if new < lower[d]:
            new = lower[d]
        elif new > upper[d]:
            new = upper[d]
        out[d] = new
        residual = residual + w[d] * (new - old)
        i += 1
    return out, residual, i


def bilinear_warp(cnp.ndarray[double, ndim=3] img,
                  cnp.ndarray[double, ndim=2] rows,
                  cnp.ndarray[double, ndim=2] cols):
    cdef Py_ssize_t C = img.shape[0], H = img.shape[1], W = img.shape[2]
    cdef Py_ssize_t c, i, j, r0, c0, r1, c1
    cdef double r, q, fr, fc, top, bottom
    cdef cnp.ndarray[double, ndim=3] out = np.empty((C, H, W), dtype=np.float64)
    for i in range(H):
        for j in range(W):
            r = rows[i, j]
            q = cols[i, j]
            if r < 0.0:
                r = 0.0
            elif r > H - 1:
                r = H - 1
            if q < 0.0:
                q = 0.0
            elif q > W - 1:
                q = W - 1
            r0 = <Py_ssize_t>floor(r)
            c0 = <Py_ssize_t>floor(q)
            fr = r - r0
            fc = q - c0
            r1 = r0 + 1 if r0 + 1 < H else H - 1
            c1 = c0 + 1 if c0 + 1 < W else W - 1
            for c in range(C):
                top = img[c, r0, c0] * (1.0 - fc) + img[c, r0, c1] * fc
                bottom = img[c, r1, c0] * (1.0 - fc) + img[c, r1, c1] * fc
                out[c, i, j] = top * (1.0 - fr) + bottom * fr
    return out


def conv2d_symmetric(cnp.ndarray[double, ndim=3] padded,
                     cnp.ndarray[double, ndim=2] kernel,
                     Py_ssize_t H, Py_ssize_t W):
    cdef Py_ssize_t C = padded.shape[0], K = kernel.shape[0]
    cdef Py_ssize_t c, i, j, a, b
    cdef double k
    cdef cnp.ndarray[double, ndim=3] out = np.zeros((C, H, W), dtype=np.float64)
    # tap-major accumulation, kernel flipped (true convolution)
    for a in range(K):
        for b in range(K):
            k = kernel[K - 1 - a, K - 1 - b]
            for c in range(C):
                for i in range(H):
                    for j in range(W):
                        out[c, i, j] = out[c, i, j] + k * padded[c, i + a, j + b]
    return out
