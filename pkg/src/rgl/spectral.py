"""Orthonormal 2-D DCT, band filtering and linear subspaces of input space."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .rng import RngStream


@lru_cache(maxsize=32)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``M`` with ``coeffs = M @ signal``."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0] /= np.sqrt(2.0)
    m.setflags(write=False)
    return m


def dct2(x) -> np.ndarray:
    """Per-channel orthonormal 2-D DCT-II over the last two axes."""
    x = np.asarray(x, dtype=np.float64)
    mh = dct_matrix(x.shape[-2])
    mw = dct_matrix(x.shape[-1])
    return mh @ x @ mw.T


def idct2(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    mh = dct_matrix(c.shape[-2])
    mw = dct_matrix(c.shape[-1])
    return mh.T @ c @ mw


def freq_flip(x) -> np.ndarray:
    """Swap low and high frequencies by reversing both DCT axes."""
    return idct2(dct2(x)[..., ::-1, ::-1])


def band_filter(x, mode: str, square: int) -> np.ndarray:
    """Keep a ``square x square`` block of DCT coefficients.

    ``lowpass`` keeps the top-left block, ``highpass`` the bottom-right one.
    """
    x = np.asarray(x, dtype=np.float64)
    h, w = x.shape[-2:]
    if not 1 <= square <= min(h, w):
        raise ParameterError(f"square must lie in [1, {min(h, w)}], got {square}")
    c = dct2(x)
    mask = np.zeros((h, w), dtype=bool)
    if mode == "lowpass":
        mask[:square, :square] = True
    elif mode == "highpass":
        mask[h - square:, w - square:] = True
    else:
        raise ParameterError(f"mode must be 'lowpass' or 'highpass', got {mode!r}")
    return idct2(np.where(mask, c, 0.0))


@dataclass(frozen=True, eq=False)
class SubspaceSpec:
    """A linear subspace of the flattened input space.

    ``explicit``-style kinds hold an orthonormal basis (rows of ``basis``).
    ``orthogonal_complement`` holds the basis of the *excluded* span.
    ``dct_diagonal`` and ``dct_block`` are implicit: ``rows``/``cols`` index
    DCT atoms, replicated over every channel of ``shape``.
    """

    kind: str
    shape: tuple
    basis: np.ndarray | None = None
    rows: tuple = ()
    cols: tuple = ()
    start_index: int | None = None
    label: str = ""
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def ambient_dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dim(self) -> int:
        if self.kind == "orthogonal_complement":
            return self.ambient_dim - self.basis.shape[0]
        if self.kind in ("dct_diagonal", "dct_block"):
            return len(self.rows) * self.shape[0]
        return self.basis.shape[0]

    def _dct_factors(self):
        if "ab" not in self._cache:
            _, h, w = self.shape
            a = dct_matrix(h)[list(self.rows)]
            b = dct_matrix(w)[list(self.cols)]
            self._cache["ab"] = (a, b)
        return self._cache["ab"]

    def project(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.size != self.ambient_dim:
            raise ParameterError(
                f"vector of size {v.size} does not match ambient dimension {self.ambient_dim}")
        flat = v.reshape(-1)
        if self.kind in ("dct_diagonal", "dct_block"):
            a, b = self._dct_factors()
            img = flat.reshape(self.shape)
            coef = np.einsum("kh,chw,kw->ck", a, img, b)
            out = np.einsum("ck,kh,kw->chw", coef, a, b)
            return out.reshape(v.shape)
        if self.kind == "orthogonal_complement":
            if self.basis.shape[0] == 0:
                return v.copy()
            return (flat - self.basis.T @ (self.basis @ flat)).reshape(v.shape)
        return (self.basis.T @ (self.basis @ flat)).reshape(v.shape)

    def atoms(self) -> np.ndarray:
        """Materialize an orthonormal basis as a ``(dim, D)`` array."""
        if self.kind in ("dct_diagonal", "dct_block"):
            a, b = self._dct_factors()
            c, h, w = self.shape
            out = np.zeros((len(self.rows) * c, c, h, w))
            for k in range(len(self.rows)):
                atom = np.outer(a[k], b[k])
                for ch in range(c):
                    out[k * c + ch, ch] = atom
            return out.reshape(len(out), -1)
        if self.kind == "orthogonal_complement":
            d = self.ambient_dim
            q, _ = np.linalg.qr(np.vstack([self.basis, np.eye(d)]).T)
            return q[:, self.basis.shape[0]:d].T.copy()
        return self.basis.copy()


def _orthonormalize(vectors) -> np.ndarray:
    v = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    q, r = np.linalg.qr(v.T)
    if np.any(np.abs(np.diag(r)) < 1e-12):
        raise ParameterError("spanning vectors are linearly dependent")
    return q.T.copy()


def span(vectors, shape=None, kind="explicit", label="") -> SubspaceSpec:
    basis = _orthonormalize(vectors)
    shape = tuple(shape) if shape is not None else (basis.shape[1],)
    return SubspaceSpec(kind, shape, basis=basis, label=label)


def canonical_axis(direction, label="axis") -> SubspaceSpec:
    return span([direction], kind="canonical_axis", label=label)


def orthogonal_complement(vectors, label="complement") -> SubspaceSpec:
    basis = _orthonormalize(vectors)
    return SubspaceSpec("orthogonal_complement", (basis.shape[1],), basis=basis, label=label)


def full_space(dim: int) -> SubspaceSpec:
    return SubspaceSpec("orthogonal_complement", (dim,), basis=np.zeros((0, dim)), label="full")


def random_subspace(rng: RngStream, dim: int, size: int, orthogonal_to=None,
                    label="random") -> SubspaceSpec:
    """Uniformly random ``size``-dim subspace, optionally inside the complement of some vectors."""
    g = rng.normal((size, dim))
    if orthogonal_to is not None:
        excl = _orthonormalize(orthogonal_to)
        g = g - (g @ excl.T) @ excl
    return span(g, kind="random", label=label)


def dct_diagonal_subspaces(height: int, width: int, channels: int, window: int,
                           step: int) -> list[SubspaceSpec]:
    """Sliding windows of ``window`` consecutive diagonal DCT atoms, stride ``step``."""
    side = min(height, width)
    if not 1 <= window <= side:
        raise ParameterError(f"window must lie in [1, {side}], got {window}")
    if step < 1:
        raise ParameterError(f"step must be >= 1, got {step}")
    count = (side - window) // step + 1
    out = []
    for j in range(count):
        idx = tuple(range(j * step, j * step + window))
        out.append(SubspaceSpec("dct_diagonal", (channels, height, width), rows=idx, cols=idx,
                                start_index=j * step, label=f"diag{j}"))
    return out


def dct_block_partition(height: int, width: int, channels: int, block: int) -> list[SubspaceSpec]:
    """Tile the DCT coefficient grid into ``block x block`` squares.

    The family is complete and mutually orthogonal, so energies over it
    sum to the squared norm. Tiles are ordered by their diagonal position.
    """
    if block < 1:
        raise ParameterError(f"block must be >= 1, got {block}")
    tiles = []
    for r0 in range(0, height, block):
        for c0 in range(0, width, block):
            rr = range(r0, min(r0 + block, height))
            cc = range(c0, min(c0 + block, width))
            rows = tuple(r for r in rr for _ in cc)
            cols = tuple(c for _ in rr for c in cc)
            tiles.append((r0 + c0, r0, c0, rows, cols))
    tiles.sort()
    return [SubspaceSpec("dct_block", (channels, height, width), rows=rows, cols=cols,
                         start_index=r0 * width + c0, label=f"block{r0}_{c0}")
            for _, r0, c0, rows, cols in tiles]


def subspace_project(v, subspace: SubspaceSpec) -> np.ndarray:
    return subspace.project(v)


def subspace_energy(delta, subspaces) -> np.ndarray:
    """Squared norm of ``delta`` projected on each subspace."""
    out = np.empty(len(subspaces))
    for j, s in enumerate(subspaces):
        p = s.project(delta)
        out[j] = float(np.dot(p.ravel(), p.ravel()))
    return out
