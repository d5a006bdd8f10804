"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
fallback in :mod:`rgl._pykernels` is used. Set ``RGL_PURE_PYTHON=1`` to
force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("RGL_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels

linear_solver_core = _impl.linear_solver_core
bilinear_warp = _impl.bilinear_warp
conv2d_symmetric = _impl.conv2d_symmetric


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return found
