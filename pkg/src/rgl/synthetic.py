"""Rotated synthetic datasets with known discriminative directions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .rng import RngStream, random_orthonormal


@dataclass
class SyntheticDataset:
    """Samples ``x = U z`` with labels in {-1, +1}.

    ``latent`` keeps the exact pre-rotation coordinates ``z``; ``u(k)`` is
    the ``k``-th column of the rotation (``u(0)`` is the discriminative axis).
    """

    x: np.ndarray
    y: np.ndarray
    rotation: np.ndarray
    latent: np.ndarray
    params: dict = field(default_factory=dict)

    def u(self, k: int) -> np.ndarray:
        return self.rotation[:, k].copy()

    def __len__(self):
        return len(self.y)


def _labels(rng, n):
    return np.where(rng.integers(2, n) == 1, 1, -1)


def _feature(eps, gap):
    return 0.5 * eps if gap else eps


def gen_t1(eps: float, sigma: float, n: int, dim: int, rng: RngStream,
           rotation=None, *, gap: bool = False) -> SyntheticDataset:
    """One discriminative coordinate ``eps * y``; the other ``dim - 1`` are N(0, sigma^2).

    With ``gap=True``, ``eps`` is the distance between the two class
    means instead, so the feature is ``eps / 2 * y`` and the margin of
    the ideal classifier is ``eps / 2``. ``rotation`` reuses a given
    ``U`` (e.g. to draw a test set from the training distribution).
    """
    if dim < 2:
        raise ParameterError(f"T1 needs dim >= 2, got {dim}")
    if eps <= 0 or sigma < 0:
        raise ParameterError(f"need eps > 0 and sigma >= 0, got ({eps}, {sigma})")
    u = random_orthonormal(rng, dim) if rotation is None else np.asarray(rotation)
    y = _labels(rng, n)
    z = np.empty((n, dim))
    z[:, 0] = _feature(eps, gap) * y
    z[:, 1:] = rng.normal((n, dim - 1), scale=sigma)
    return SyntheticDataset(z @ u.T, y, u, z,
                            {"kind": "t1", "eps": eps, "sigma": sigma, "gap": gap})


def gen_t2(rho: float, eps: float, sigma: float, lattice: int, n: int, dim: int, rng: RngStream,
           rotation=None, *, gap: bool = False) -> SyntheticDataset:
    """T1 plus a class-offset lattice on the second coordinate.

    ``z_2 = rho * k`` for y = +1 and ``rho * (k + 1/2)`` for y = -1, with
    ``k`` uniform on ``{-lattice, ..., lattice - 1}``. ``gap`` reads
    ``eps`` as in :func:`gen_t1`.
    """
    if dim < 3:
        raise ParameterError(f"T2 needs dim >= 3, got {dim}")
    if rho < 0 or eps < 0 or sigma < 0 or lattice < 1:
        raise ParameterError("need rho, eps, sigma >= 0 and lattice >= 1")
    u = random_orthonormal(rng, dim) if rotation is None else np.asarray(rotation)
    y = _labels(rng, n)
    k = rng.integers(2 * lattice, n) - lattice
    z = np.empty((n, dim))
    z[:, 0] = _feature(eps, gap) * y
    z[:, 1] = rho * np.where(y == 1, k, k + 0.5)
    z[:, 2:] = rng.normal((n, dim - 2), scale=sigma)
    return SyntheticDataset(z @ u.T, y, u, z,
                            {"kind": "t2", "rho": rho, "eps": eps, "sigma": sigma,
                             "lattice": lattice, "gap": gap})
