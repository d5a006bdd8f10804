"""Deterministic, splittable random streams and the distributions built on them.

Every random draw in the toolkit goes through :class:`RngStream`. The bit
source is the Philox-4x64 counter-based generator keyed by
``(seed, stream_id)``; uniforms take the top 53 bits of each 64-bit word.
Gaussians use Box-Muller, Gamma variates use Marsaglia-Tsang, so the
mapping from raw words to samples is fully pinned here rather than left to
numpy's sampling routines.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


def _mix64(z):
    # splitmix64 finalizer
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RngStream:
    """A seeded random stream. ``split(i)`` derives an independent child."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def split(self, index: int) -> "RngStream":
        child = _mix64(self.stream_id ^ _mix64(int(index) & _MASK64))
        return RngStream(self.seed, child)

    # -- primitive draws -------------------------------------------------

    def uniform(self, size=None, low=0.0, high=1.0):
        """Uniform draws on ``[low, high)``."""
        n = 1 if size is None else int(np.prod(size))
        raw = self._bits.random_raw(n)
        u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        if low != 0.0 or high != 1.0:
            u = low + (high - low) * u
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def normal(self, size=None, scale=1.0):
        """Standard normal draws via Box-Muller, scaled by ``scale``."""
        n = 1 if size is None else int(np.prod(size))
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
        angle = _TWO_PI * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        z = z[:n]
        if scale != 1.0:
            z = scale * z
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def integers(self, high, size=None):
        """Uniform integers on ``{0, ..., high-1}``."""
        u = self.uniform(size)
        if size is None:
            return min(int(u * high), high - 1)
        return np.minimum((u * high).astype(np.int64), high - 1)

    def gamma(self, shape, size):
        """Gamma(shape, 1) draws by Marsaglia-Tsang.

        Each rejection round consumes ``k`` normals then ``k`` uniforms,
        where ``k`` is the number of still-missing draws.
        """
        if shape <= 0:
            raise ParameterError(f"gamma shape must be positive, got {shape}")
        n = int(size)
        boost = shape < 1.0
        a = shape + 1.0 if boost else shape
        d = a - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        out = np.empty(n)
        filled = 0
        while filled < n:
            k = n - filled
            z = self.normal(k)
            u = self.uniform(k)
            v = (1.0 + c * z) ** 3
            with np.errstate(invalid="ignore", divide="ignore"):
                ok = (v > 0) & (np.log(u) < 0.5 * z * z + d - d * v + d * np.log(v))
            acc = d * v[ok]
            out[filled:filled + acc.size] = acc
            filled += acc.size
        if boost:
            out *= self.uniform(n) ** (1.0 / shape)
        return out


def rng_stream(seed: int, stream_id: int = 0) -> RngStream:
    return RngStream(seed, stream_id)


def sample_gaussian(rng: RngStream, count: int, sigma: float) -> np.ndarray:
    """``count`` i.i.d. N(0, sigma^2) samples."""
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    z = rng.normal(int(count))
    return sigma * z


def sample_dirichlet(rng: RngStream, n: int, concentration: float = 1.0) -> np.ndarray:
    """Symmetric Dirichlet weights on the ``n``-simplex (normalized Gammas)."""
    if n < 1:
        raise ParameterError(f"Dirichlet needs n >= 1, got {n}")
    if concentration <= 0:
        raise ParameterError(f"concentration must be positive, got {concentration}")
    if n == 1:
        return np.ones(1)
    g = rng.gamma(concentration, n)
    return g / g.sum()


def sample_beta(rng: RngStream, alpha: float, beta: float) -> float:
    if alpha <= 0 or beta <= 0:
        raise ParameterError(f"Beta shapes must be positive, got ({alpha}, {beta})")
    x = rng.gamma(alpha, 1)[0]
    y = rng.gamma(beta, 1)[0]
    return float(x / (x + y))


def random_orthonormal(rng: RngStream, dim: int) -> np.ndarray:
    """Haar-distributed rotation in SO(dim).

    QR of a Gaussian matrix with the signs of R's diagonal folded into Q,
    then the first column negated if the determinant is -1.
    """
    if dim < 1:
        raise ParameterError(f"dimension must be >= 1, got {dim}")
    g = rng.normal((dim, dim))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
