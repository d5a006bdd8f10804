"""Reference implementations of the compiled kernels (numpy / plain Python)."""
import numpy as np


def linear_solver_core(x, w, order, lower, upper, residual, tol):
    out = x.copy()
    i = 0
    n = len(order)
    while abs(residual) > tol and i < n:
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
    return out, float(residual), i


def bilinear_warp(img, rows, cols):
    C, H, W = img.shape
    r = np.clip(rows, 0.0, H - 1)
    q = np.clip(cols, 0.0, W - 1)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(q).astype(np.intp)
    fr = r - r0
    fc = q - c0
    r1 = np.minimum(r0 + 1, H - 1)
    c1 = np.minimum(c0 + 1, W - 1)
    top = img[:, r0, c0] * (1.0 - fc) + img[:, r0, c1] * fc
    bottom = img[:, r1, c0] * (1.0 - fc) + img[:, r1, c1] * fc
    return top * (1.0 - fr) + bottom * fr


def conv2d_symmetric(padded, kernel, H, W):
    K = kernel.shape[0]
    out = np.zeros((padded.shape[0], H, W))
    for a in range(K):
        for b in range(K):
            out = out + kernel[K - 1 - a, K - 1 - b] * padded[:, a:a + H, b:b + W]
    return out
