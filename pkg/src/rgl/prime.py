"""Mixing of composed primitive chains, Beta blending and offline augmentation."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ParameterError
from .primitives import (PrimitiveParams, apply_primitive, spatial_sigma_max,
                         validate_bijectivity)
from .rng import RngStream, sample_beta, sample_dirichlet

MIXING_MODES = ("dirichlet_with_clean", "beta_blend")


@dataclass(frozen=True)
class PrimeConfig:
    width: int = 3
    depth: int = 3
    primitives: tuple = ()
    mixing: str = "dirichlet_with_clean"
    beta_shape: tuple = (1.0, 1.0)
    strength_scale: float = 1.0
    additive_enabled: bool = False

    def __post_init__(self):
        if self.width < 1 or self.depth < 1:
            raise ParameterError(f"width and depth must be >= 1, got ({self.width}, {self.depth})")
        if self.strength_scale <= 0:
            raise ParameterError(f"strength scale must be positive, got {self.strength_scale}")
        if self.mixing not in MIXING_MODES:
            raise ParameterError(f"mixing must be one of {MIXING_MODES}, got {self.mixing!r}")
        if min(self.beta_shape) <= 0:
            raise ParameterError(f"Beta shapes must be positive, got {self.beta_shape}")
        object.__setattr__(self, "primitives", tuple(self.primitives))
        for p in self.primitives:
            if p.kind == "additive" and not self.additive_enabled:
                raise ConfigError("additive primitive listed but additive_enabled is false")

    @property
    def pool(self) -> tuple:
        """The primitives with the identity always present."""
        if any(p.kind == "identity" for p in self.primitives):
            return self.primitives
        return (PrimitiveParams("identity"),) + self.primitives


def small_preset() -> PrimeConfig:
    """32x32-scale defaults."""
    return PrimeConfig(primitives=(
        PrimitiveParams("spectral", 3, sigma_max=4.0),
        PrimitiveParams("spatial", 100, sigma_max=spatial_sigma_max(100)),
        PrimitiveParams("color", 10, sigma_max=0.01, band=10),
    ))


def large_preset() -> PrimeConfig:
    """224x224-scale defaults."""
    return PrimeConfig(primitives=(
        PrimitiveParams("spectral", 3, sigma_max=4.0),
        PrimitiveParams("spatial", 500, sigma_max=spatial_sigma_max(500)),
        PrimitiveParams("color", 500, sigma_max=0.05, band=20),
    ))


def filling_level_preset() -> PrimeConfig:
    """Smooth, mild transforms blended with Beta(5, 1)."""
    return PrimeConfig(
        depth=3,
        primitives=(
            PrimitiveParams("spectral", 3, sigma_max=float(np.sqrt(0.01))),
            PrimitiveParams("spatial", 10, sigma_max=spatial_sigma_max(10)),
            PrimitiveParams("color", 500, sigma_max=float(np.sqrt(0.001)), band=20),
        ),
        mixing="beta_blend",
        beta_shape=(5.0, 1.0),
    )


PRESETS = {"small": small_preset, "large": large_preset, "filling": filling_level_preset}


def _check_unit(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ParameterError(f"expected a (C, H, W) image, got shape {x.shape}")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ParameterError("input image is not in the unit range [0, 1]")
    return x


def _branch(x, cfg: PrimeConfig, rng: RngStream):
    pool = cfg.pool
    out = x
    for _ in range(cfg.depth):
        g = pool[rng.integers(len(pool))]
        sigma = rng.uniform(low=g.sigma_min, high=g.sigma_max)
        out = apply_primitive(out, g, sigma, rng, cfg.additive_enabled)
    return out


def _mix(x, branches, weights):
    # x + sum w_i (b_i - x): identity branches contribute exact zeros
    out = x.copy()
    for w, b in zip(weights, branches):
        out += w * (b - x)
    return out


def prime_augment(x, cfg: PrimeConfig, rng: RngStream, *, _weights=None) -> np.ndarray:
    """Dirichlet mix of the clean image and ``cfg.width`` composed branches."""
    x = _check_unit(x)
    branches = [_branch(x, cfg, rng) for _ in range(cfg.width)]
    lam = sample_dirichlet(rng, cfg.width + 1, 1.0) if _weights is None else np.asarray(_weights)
    return np.clip(_mix(x, branches, lam[1:]), 0.0, 1.0)


def prime_beta_augment(x, cfg: PrimeConfig, rng: RngStream, *, p=None) -> np.ndarray:
    """Blend the clean image with the Dirichlet mix of transformed branches only.

    ``p`` overrides the Beta draw (used to probe the two endpoints).
    """
    x = _check_unit(x)
    branches = [_branch(x, cfg, rng) for _ in range(cfg.width)]
    lam = sample_dirichlet(rng, cfg.width, 1.0)
    mixed = np.clip(_mix(x, branches, lam), 0.0, 1.0)
    if p is None:
        p = sample_beta(rng, *cfg.beta_shape)
    # pixels the branches left untouched stay exactly equal to the input
    return np.where(mixed == x, x, (1.0 - p) * x + p * mixed)


def augment(x, cfg: PrimeConfig, rng: RngStream) -> np.ndarray:
    """Dispatch on the configured mixing mode."""
    if cfg.mixing == "beta_blend":
        return prime_beta_augment(x, cfg, rng)
    return prime_augment(x, cfg, rng)


def scale_strengths(cfg: PrimeConfig, factor: float) -> PrimeConfig:
    """Multiply every strength range by ``factor``; re-check spatial bijectivity."""
    if factor <= 0:
        raise ParameterError(f"strength scale must be positive, got {factor}")
    scaled = []
    for p in cfg.primitives:
        q = p.scaled(factor)
        if q.kind == "spatial" and q.sigma_max > 0:
            grid = min(max(16, 4 * q.smoothness), 1024)
            report = validate_bijectivity(q.smoothness, q.sigma_max, grid=grid, draws=20)
            if not report.ok:
                raise ParameterError(
                    f"spatial primitive (cut frequency {q.smoothness}) is not bijective at "
                    f"sigma_max={q.sigma_max:.4g}: displacement gradient {report.max_gradient:.3g}")
        scaled.append(q)
    return replace(cfg, primitives=tuple(scaled), strength_scale=cfg.strength_scale * factor)


def _threads():
    n = int(os.environ.get("RGL_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def augment_dataset_offline(inputs, k: int, cfg: PrimeConfig, seed: int, workers=None):
    """Return ``[x_i, aug(x_i, 1), ..., aug(x_i, k)]`` for every input.

    The copy ``(i, c)`` uses stream ``RngStream(seed).split(i).split(c)``, so
    the output does not depend on scheduling.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    root = RngStream(seed)

    def one(item):
        i, x = item
        x = np.asarray(x, dtype=np.float64)
        stream = root.split(i)
        return [x.copy()] + [augment(x, cfg, stream.split(c)) for c in range(1, k + 1)]

    workers = _threads() if workers is None else workers
    items = list(enumerate(inputs))
    if workers <= 1:
        groups = [one(it) for it in items]
    else:
        with ThreadPoolExecutor(workers) as pool:
            groups = list(pool.map(one, items))
    return [img for g in groups for img in g]


# -- configuration file --------------------------------------------------------

_PIPELINE_KEYS = {"width": int, "depth": int, "mixing": str, "beta_alpha": float,
                  "beta_beta": float, "strength_scale": float, "preset": str}
_SECTION_KEYS = {
    "spectral": {"kernel_size": int, "sigma_min": float, "sigma_max": float},
    "spatial": {"cut_frequency": int, "sigma_min": float, "sigma_max": float},
    "color": {"max_frequency": int, "band": int, "sigma_min": float, "sigma_max": float},
    "additive": {"enabled": str, "sigma_min": float, "sigma_max": float},
}
_SMOOTHNESS_KEY = {"spectral": "kernel_size", "spatial": "cut_frequency", "color": "max_frequency"}


def _parse_bool(text, line):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", line)


def parse_config(text: str) -> PrimeConfig:
    """Parse the ``[section]`` / ``key = value`` format.

    Sections: ``[pipeline]``, ``[spectral]``, ``[spatial]``, ``[color]``,
    ``[additive]``. A primitive is in the pool iff its section is present.
    ``#`` and ``;`` start comments.
    """
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            current = line[1:-1].strip()
            if current != "pipeline" and current not in _SECTION_KEYS:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        known = _PIPELINE_KEYS if current == "pipeline" else _SECTION_KEYS[current]
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            typed = known[key](value)
        except ValueError:
            raise ConfigError(f"bad value {value!r} for {key!r}", lineno) from None
        sections[current][key] = (typed, lineno)

    pipe = {k: v for k, (v, _) in sections.get("pipeline", {}).items()}
    base = PrimeConfig()
    if "preset" in pipe:
        if pipe["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {pipe['preset']!r}")
        base = PRESETS[pipe["preset"]]()
    prims = list(base.primitives) if not any(s in sections for s in _SECTION_KEYS) else []
    additive_enabled = False
    for name in ("spectral", "spatial", "color", "additive"):
        if name not in sections:
            continue
        entries = {k: v for k, (v, _) in sections[name].items()}
        first_line = min((ln for _, ln in sections[name].values()), default=None)
        if name == "additive":
            additive_enabled = _parse_bool(entries.get("enabled", "false"), first_line)
            if not additive_enabled:
                continue
        smooth_key = _SMOOTHNESS_KEY.get(name)
        if smooth_key and smooth_key not in entries:
            raise ConfigError(f"[{name}] requires {smooth_key}", first_line)
        smooth = entries.get(smooth_key, 1) if smooth_key else 1
        sigma_max = entries.get("sigma_max")
        if sigma_max is None:
            if name != "spatial":
                raise ConfigError(f"[{name}] requires sigma_max", first_line)
            sigma_max = spatial_sigma_max(smooth)
        if name == "spatial" and sigma_max > spatial_sigma_max(smooth):
            report = validate_bijectivity(smooth, sigma_max, grid=min(max(16, 4 * smooth), 1024),
                                          draws=20)
            if not report.ok:
                raise ConfigError(f"[spatial] sigma_max={sigma_max} breaks bijectivity "
                                  f"(gradient {report.max_gradient:.3g})", first_line)
        try:
            prims.append(PrimitiveParams(name, smooth, sigma_max=sigma_max,
                                         sigma_min=entries.get("sigma_min", 0.0),
                                         band=entries.get("band")))
        except ParameterError as exc:
            raise ConfigError(str(exc), first_line) from None
    try:
        return PrimeConfig(
            width=pipe.get("width", base.width),
            depth=pipe.get("depth", base.depth),
            primitives=tuple(prims),
            mixing=pipe.get("mixing", base.mixing),
            beta_shape=(pipe.get("beta_alpha", base.beta_shape[0]),
                        pipe.get("beta_beta", base.beta_shape[1])),
            strength_scale=pipe.get("strength_scale", 1.0),
            additive_enabled=additive_enabled,
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def format_config(cfg: PrimeConfig) -> str:
    """Inverse of :func:`parse_config` for fully resolved configurations."""
    lines = ["[pipeline]", f"width = {cfg.width}", f"depth = {cfg.depth}",
             f"mixing = {cfg.mixing}", f"beta_alpha = {cfg.beta_shape[0]!r}",
             f"beta_beta = {cfg.beta_shape[1]!r}", f"strength_scale = {cfg.strength_scale!r}"]
    for p in cfg.primitives:
        if p.kind == "identity":
            continue
        lines += ["", f"[{p.kind}]"]
        if p.kind == "additive":
            lines.append("enabled = true")
        else:
            lines.append(f"{_SMOOTHNESS_KEY[p.kind]} = {p.smoothness}")
        if p.kind == "color" and p.band is not None:
            lines.append(f"band = {p.band}")
        lines += [f"sigma_min = {p.sigma_min!r}", f"sigma_max = {p.sigma_max!r}"]
    return "\n".join(lines) + "\n"


def config_to_dict(cfg: PrimeConfig) -> dict:
    return {
        "width": cfg.width, "depth": cfg.depth, "mixing": cfg.mixing,
        "beta_shape": list(cfg.beta_shape), "strength_scale": cfg.strength_scale,
        "additive_enabled": cfg.additive_enabled,
        "primitives": [{"kind": p.kind, "smoothness": p.smoothness, "sigma_min": p.sigma_min,
                        "sigma_max": p.sigma_max, "band": p.band} for p in cfg.pool],
    }
