"""Max-entropy primitive transformations: spectral, spatial, color, additive.

Each primitive is split into a coefficient draw (``draw_*``) and a
deterministic application, so coefficient laws can be checked without
touching images. All outputs are clipped to ``[0, 1]``; zero strength
returns an exact copy of the input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, ParameterError
from .rng import RngStream

# Largest spatial strength per cut frequency for which the displacement
# Jacobian stays below 0.5 over 200 draws (20 for K=500) on a
# min(4K, 1024)-point lattice; generated by benchmarks/calibrate_spatial.py.
# K=1 admits no frequency pair with i, j >= 1, so it shares the K=2 bound.
SPATIAL_SIGMA_MAX = {
    2: 0.07,
    5: 0.019,
    10: 0.0086,
    20: 0.0041,
    100: 0.00077,
    500: 0.00018,
}


def spatial_sigma_max(cut_frequency: int) -> float:
    """Default upper strength for a spatial cut frequency.

    Values between table entries follow the ``1/K`` scaling of the
    displacement gradient, anchored at the nearest smaller entry.
    """
    if cut_frequency < 1:
        raise ParameterError(f"cut frequency must be >= 1, got {cut_frequency}")
    if cut_frequency in SPATIAL_SIGMA_MAX:
        return SPATIAL_SIGMA_MAX[cut_frequency]
    anchor = max((k for k in SPATIAL_SIGMA_MAX if k <= cut_frequency), default=2)
    return SPATIAL_SIGMA_MAX[anchor] * anchor / cut_frequency


@dataclass(frozen=True)
class PrimitiveParams:
    """One entry of the augmentation pool.

    ``smoothness`` is the FIR size (spectral), cut frequency (spatial) or
    maximum frequency (color); it is ignored for ``additive``/``identity``.
    """

    kind: str
    smoothness: int = 1
    sigma_max: float = 0.0
    sigma_min: float = 0.0
    band: int | None = None

    def __post_init__(self):
        if self.kind not in ("spectral", "spatial", "color", "additive", "identity"):
            raise ParameterError(f"unknown primitive kind {self.kind!r}")
        if self.sigma_min < 0 or self.sigma_max < self.sigma_min:
            raise ParameterError(
                f"{self.kind}: need 0 <= sigma_min <= sigma_max, got "
                f"({self.sigma_min}, {self.sigma_max})")
        if self.kind == "spectral" and (self.smoothness < 1 or self.smoothness % 2 == 0):
            raise ParameterError(f"spectral kernel size must be odd, got {self.smoothness}")
        if self.kind in ("spatial", "color") and self.smoothness < 1:
            raise ParameterError(f"{self.kind}: smoothness must be >= 1")
        if self.kind == "color" and self.band is not None and not 1 <= self.band <= self.smoothness:
            raise ParameterError(f"color band must lie in [1, {self.smoothness}], got {self.band}")

    def scaled(self, factor: float) -> "PrimitiveParams":
        return PrimitiveParams(self.kind, self.smoothness, self.sigma_max * factor,
                               self.sigma_min * factor, self.band)


def sinpi(t):
    """``sin(pi * t)`` with exact zeros at integer ``t``."""
    t = np.asarray(t, dtype=np.float64)
    r = t - 2.0 * np.round(0.5 * t)
    r = np.where(r > 0.5, 1.0 - r, np.where(r < -0.5, -1.0 - r, r))
    return np.sin(np.pi * r)


def _check_image(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ParameterError(f"expected a (C, H, W) image, got shape {x.shape}")
    return x


# -- spectral ---------------------------------------------------------------

def draw_fir_kernel(rng: RngStream, kernel_size: int, sigma: float) -> np.ndarray:
    """Random part of the FIR filter: i.i.d. N(0, sigma^2) entries."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ParameterError(f"kernel size must be odd, got {kernel_size}")
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    return rng.normal((kernel_size, kernel_size), scale=sigma)


def convolve_symmetric(x, kernel) -> np.ndarray:
    """Same-size 2-D convolution of every channel, half-sample symmetric padding."""
    x = _check_image(x)
    k = np.asarray(kernel, dtype=np.float64)
    p = k.shape[0] // 2
    padded = np.pad(x, ((0, 0), (p, p), (p, p)), mode="symmetric")
    return kernels.conv2d_symmetric(np.ascontiguousarray(padded), np.ascontiguousarray(k),
                                    x.shape[1], x.shape[2])


def spectral_transform(x, kernel_size: int, sigma: float, rng: RngStream) -> np.ndarray:
    """Convolve with ``impulse + noise`` sharing one kernel across channels."""
    x = _check_image(x)
    noise = draw_fir_kernel(rng, kernel_size, sigma)
    if sigma == 0:
        return x.copy()
    noise[kernel_size // 2, kernel_size // 2] += 1.0
    return np.clip(convolve_symmetric(x, noise), 0.0, 1.0)


# -- spatial ----------------------------------------------------------------

def spatial_mask(cut_frequency: int) -> np.ndarray:
    """Boolean ``(K, K)`` mask of frequency pairs ``i, j >= 1`` with ``i^2 + j^2 <= K^2``."""
    i = np.arange(1, cut_frequency + 1)
    return (i[:, None] ** 2 + i[None, :] ** 2) <= cut_frequency ** 2


def draw_displacement_coeffs(rng: RngStream, cut_frequency: int, sigma: float) -> np.ndarray:
    """Coefficients ``beta[c, i-1, j-1] ~ N(0, sigma^2 / (i^2 + j^2))`` for both axes."""
    if cut_frequency < 1:
        raise ParameterError(f"cut frequency must be >= 1, got {cut_frequency}")
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    mask = spatial_mask(cut_frequency)
    i = np.arange(1, cut_frequency + 1)
    scale = sigma / np.sqrt(i[:, None] ** 2 + i[None, :] ** 2)
    n = int(mask.sum())
    coeffs = np.zeros((2, cut_frequency, cut_frequency))
    z = rng.normal(2 * n)
    coeffs[0][mask] = z[:n] * scale[mask]
    coeffs[1][mask] = z[n:] * scale[mask]
    return coeffs


def _unit_grid(n):
    return np.arange(n) / (n - 1) if n > 1 else np.zeros(1)


def displacement_field(coeffs, height: int, width: int) -> np.ndarray:
    """Evaluate the sine-series displacement on a ``height x width`` grid.

    Coordinates are normalized to ``[0, 1]``; returns ``(2, H, W)`` with
    component 0 displacing rows and component 1 columns.
    """
    k = coeffs.shape[-1]
    freqs = np.arange(1, k + 1)
    s_rows = sinpi(freqs[:, None] * _unit_grid(height)[None, :])
    s_cols = sinpi(freqs[:, None] * _unit_grid(width)[None, :])
    return np.stack([s_rows.T @ coeffs[c] @ s_cols for c in range(2)])


def warp(x, field) -> np.ndarray:
    """Sample ``x`` at ``r + field(r)`` with bilinear interpolation and border clamping."""
    x = _check_image(x)
    _, h, w = x.shape
    rows = np.arange(h, dtype=np.float64)[:, None] + field[0] * max(h - 1, 0)
    cols = np.arange(w, dtype=np.float64)[None, :] + field[1] * max(w - 1, 0)
    rows = np.ascontiguousarray(np.broadcast_to(rows, (h, w)))
    cols = np.ascontiguousarray(np.broadcast_to(cols, (h, w)))
    return kernels.bilinear_warp(np.ascontiguousarray(x), rows, cols)


def spatial_transform(x, cut_frequency: int, sigma: float, rng: RngStream,
                      max_sigma: float | None = None) -> np.ndarray:
    """Random smooth diffeomorphism with zero displacement on the border."""
    x = _check_image(x)
    bound = spatial_sigma_max(cut_frequency) if max_sigma is None else max_sigma
    if sigma < 0 or sigma > bound:
        raise ParameterError(
            f"spatial strength {sigma} outside the bijective range [0, {bound}] "
            f"for cut frequency {cut_frequency}")
    coeffs = draw_displacement_coeffs(rng, cut_frequency, sigma)
    if sigma == 0:
        return x.copy()
    field = displacement_field(coeffs, x.shape[1], x.shape[2])
    return np.clip(warp(x, field), 0.0, 1.0)


@dataclass(frozen=True)
class BijectivityReport:
    ok: bool
    max_gradient: float


def validate_bijectivity(cut_frequency: int, sigma: float, grid: int, draws: int = 100,
                         seed: int = 0) -> BijectivityReport:
    """Check that the displacement Jacobian norm stays below 1.

    The Jacobian is estimated by finite differences on a ``grid x grid``
    lattice of the unit square for ``draws`` independent fields.
    """
    if grid < 8:
        raise ParameterError(f"grid must be >= 8, got {grid}")
    if sigma == 0:
        return BijectivityReport(True, 0.0)
    rng = RngStream(seed, 0x5EED)
    spacing = 1.0 / (grid - 1)
    worst = 0.0
    for _ in range(draws):
        f = displacement_field(draw_displacement_coeffs(rng, cut_frequency, sigma), grid, grid)
        a, b = np.gradient(f[0], spacing)
        c, d = np.gradient(f[1], spacing)
        # largest singular value of [[a, b], [c, d]]
        s = a * a + b * b + c * c + d * d
        det = a * d - b * c
        smax = np.sqrt(0.5 * (s + np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))))
        worst = max(worst, float(smax.max()))
    return BijectivityReport(worst < 1.0, worst)


# -- color ------------------------------------------------------------------

def draw_color_coeffs(rng: RngStream, max_frequency: int, sigma: float, band: int,
                      channels: int = 3):
    """Band start ``s`` and coefficients ``beta[n - s, c]`` for ``n`` in ``[s, s + band)``."""
    if not 1 <= band <= max_frequency:
        raise ParameterError(f"band must lie in [1, {max_frequency}], got {band}")
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    start = rng.integers(max_frequency - band + 1)
    beta = rng.normal((band, channels), scale=sigma)
    return start, beta


def color_map(x, start: int, beta) -> np.ndarray:
    """Apply ``v + sum_n beta_n sin(pi n v)`` per channel, without clipping."""
    x = _check_image(x)
    out = x.copy()
    for k in range(beta.shape[0]):
        out += beta[k][:, None, None] * sinpi((start + k) * x)
    return out


def color_transform(x, max_frequency: int, sigma: float, band: int | None,
                    rng: RngStream) -> np.ndarray:
    x = _check_image(x)
    band = max_frequency if band is None else band
    start, beta = draw_color_coeffs(rng, max_frequency, sigma, band, x.shape[0])
    if sigma == 0:
        return x.copy()
    return np.clip(color_map(x, start, beta), 0.0, 1.0)


# -- additive ---------------------------------------------------------------

def additive_noise(x, sigma: float, rng: RngStream, *, enabled: bool = True) -> np.ndarray:
    """Per-pixel Gaussian noise. Off unless explicitly enabled."""
    if not enabled:
        raise ConfigError("additive primitive used while disabled")
    x = _check_image(x)
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return x.copy()
    return np.clip(x + rng.normal(x.shape, scale=sigma), 0.0, 1.0)


def apply_primitive(x, params: PrimitiveParams, sigma: float, rng: RngStream,
                    additive_enabled: bool = False) -> np.ndarray:
    """Apply one pool entry at a given strength."""
    if params.kind == "identity":
        return np.array(x, dtype=np.float64, copy=True)
    if params.kind == "spectral":
        return spectral_transform(x, params.smoothness, sigma, rng)
    if params.kind == "spatial":
        return spatial_transform(x, params.smoothness, sigma, rng,
                                 max_sigma=max(params.sigma_max, spatial_sigma_max(params.smoothness)))
    if params.kind == "color":
        return color_transform(x, params.smoothness, sigma, params.band, rng)
    return additive_noise(x, sigma, rng, enabled=additive_enabled)
