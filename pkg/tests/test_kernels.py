"""The compiled and pure-Python kernels must agree bit for bit."""
import numpy as np
import pytest

from rgl import kernels
from rgl.rng import RngStream

BACKENDS = kernels.available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def test_backend_selected():
    assert kernels.BACKEND in BACKENDS


@needs_both
def test_linear_solver_core_agree():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    r = RngStream(0)
    for _ in range(200):
        d = 12
        x = r.uniform(d)
        w = r.normal(d)
        order = np.argsort(-np.abs(w), kind="stable").astype(np.int64)
        lo, hi = x - r.uniform(d), x + r.uniform(d)
        res = float(r.normal() * 3)
        a = py.linear_solver_core(x, w, order, lo, hi, res, 1e-9)
        b = cy.linear_solver_core(x, w, order, lo, hi, res, 1e-9)
        assert np.array_equal(np.asarray(a[0]), np.asarray(b[0])) and a[1:] == tuple(b[1:])


@needs_both
def test_bilinear_agree():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    r = RngStream(1)
    img = r.uniform((3, 9, 11))
    rows = r.uniform((9, 11), -2, 11)
    cols = r.uniform((9, 11), -2, 13)
    assert np.array_equal(py.bilinear_warp(img, rows, cols), np.asarray(cy.bilinear_warp(img, rows, cols)))


@needs_both
def test_conv_agree():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    r = RngStream(2)
    padded = r.uniform((3, 14, 12))
    k = r.normal((5, 5))
    assert np.array_equal(py.conv2d_symmetric(padded, k, 10, 8),
                          np.asarray(cy.conv2d_symmetric(padded, k, 10, 8)))
