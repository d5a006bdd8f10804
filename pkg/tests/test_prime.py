import numpy as np
import pytest

from rgl.errors import ConfigError, ParameterError
from rgl.prime import (PrimeConfig, _branch, augment, augment_dataset_offline, config_to_dict,
                       filling_level_preset, format_config, large_preset, parse_config,
                       prime_augment, prime_beta_augment, scale_strengths, small_preset)
from rgl.primitives import PrimitiveParams
from rgl.rng import RngStream, sample_dirichlet


@pytest.fixture
def img():
    return RngStream(0).uniform((3, 16, 16))


def _zero(cfg):
    return PrimeConfig(cfg.width, cfg.depth,
                       tuple(PrimitiveParams(p.kind, p.smoothness, 0.0, 0.0, p.band)
                             for p in cfg.primitives), cfg.mixing, cfg.beta_shape)


def test_identity_pool(img):
    cfg = PrimeConfig(primitives=())
    assert np.array_equal(prime_augment(img, cfg, RngStream(1)), img)


@pytest.mark.parametrize("preset", [small_preset, large_preset, filling_level_preset])
def test_zero_strength_pipeline_identity(img, preset):
    cfg = _zero(preset())
    for s in range(5):
        assert np.array_equal(augment(img, cfg, RngStream(s)), img)


def test_deterministic(img):
    cfg = small_preset()
    a = prime_augment(img, cfg, RngStream(3))
    b = prime_augment(img, cfg, RngStream(3))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, prime_augment(img, cfg, RngStream(4)))


def test_unit_range_and_input_check(img):
    cfg = small_preset()
    for s in range(10):
        y = prime_augment(img, cfg, RngStream(s))
        assert y.min() >= 0 and y.max() <= 1
    with pytest.raises(ParameterError):
        prime_augment(img + 1.0, cfg, RngStream(0))


def test_convexity_without_clipping(img):
    cfg = small_preset()
    rng = RngStream(5)
    out = prime_augment(img, cfg, rng)
    rng = RngStream(5)
    branches = [img] + [_branch(img, cfg, rng) for _ in range(cfg.width)]
    lo = np.min(branches, axis=0) - 1e-12
    hi = np.max(branches, axis=0) + 1e-12
    assert np.all(out >= lo) and np.all(out <= hi)


def test_mixing_weight_law():
    r = RngStream(6)
    w = np.array([sample_dirichlet(r, 4) for _ in range(10**5)])
    assert np.all(np.abs(w.mean(axis=0) - 0.25) < 0.01)


def test_beta_endpoints(img):
    cfg = filling_level_preset()
    assert np.array_equal(prime_beta_augment(img, cfg, RngStream(7), p=0.0), img)
    rng = RngStream(7)
    branches = [_branch(img, cfg, rng) for _ in range(cfg.width)]
    lam = sample_dirichlet(rng, cfg.width)
    mixed = img.copy()
    for w, b in zip(lam, branches):
        mixed += w * (b - img)
    mixed = np.clip(mixed, 0, 1)
    assert np.array_equal(prime_beta_augment(img, cfg, RngStream(7), p=1.0), mixed)


def test_beta_shape_ordering(img):
    base = filling_level_preset()
    strong = PrimeConfig(base.width, base.depth, small_preset().primitives, "beta_blend", (5, 1))
    weak = PrimeConfig(base.width, base.depth, small_preset().primitives, "beta_blend", (1, 5))
    small = img[:, :8, :8].copy()
    d = lambda cfg: np.mean([np.abs(augment(small, cfg, RngStream(100 + s)) - small).mean()
                             for s in range(300)])
    assert d(strong) > d(weak)


def test_scale_strengths():
    cfg = small_preset()
    assert scale_strengths(cfg, 1.0).primitives == cfg.primitives
    half = scale_strengths(cfg, 0.5)
    assert half.primitives[0].sigma_max == 2.0
    with pytest.raises(ParameterError, match="spatial"):
        scale_strengths(cfg, 100.0)
    with pytest.raises(ParameterError):
        scale_strengths(cfg, 0.0)


def test_config_validation():
    with pytest.raises(ParameterError):
        PrimeConfig(width=0)
    with pytest.raises(ParameterError):
        PrimeConfig(mixing="max")
    with pytest.raises(ConfigError):
        PrimeConfig(primitives=(PrimitiveParams("additive", sigma_max=0.1),))
    assert PrimeConfig().pool[0].kind == "identity"


def test_offline_counts_and_determinism(img):
    inputs = [img * 0.5, img]
    cfg = small_preset()
    out = augment_dataset_offline(inputs, 2, cfg, seed=11, workers=1)
    assert len(out) == 6
    assert np.array_equal(out[0], inputs[0]) and np.array_equal(out[3], inputs[1])
    again = augment_dataset_offline(inputs, 2, cfg, seed=11, workers=4)
    assert all(np.array_equal(a, b) for a, b in zip(out, again))
    assert not np.array_equal(out[1], out[2])
    with pytest.raises(ParameterError):
        augment_dataset_offline(inputs, 0, cfg, 1)


def test_offline_copies_differ():
    imgs = [RngStream(i).uniform((3, 8, 8)) for i in range(20)]
    out = augment_dataset_offline(imgs, 2, small_preset(), seed=3, workers=1)
    differ = [not np.array_equal(out[3 * i + 1], out[3 * i + 2]) for i in range(20)]
    assert np.mean(differ) > 0.99


CONFIG = """
# comment
[pipeline]
width = 2
depth = 1
mixing = beta_blend
beta_alpha = 5
beta_beta = 1

[spectral]
kernel_size = 3
sigma_max = 4.0

[spatial]
cut_frequency = 10

[color]
max_frequency = 10
band = 4
sigma_max = 0.01
"""


def test_parse_config():
    cfg = parse_config(CONFIG)
    assert cfg.width == 2 and cfg.depth == 1 and cfg.mixing == "beta_blend"
    assert cfg.beta_shape == (5.0, 1.0)
    assert [p.kind for p in cfg.pool] == ["identity", "spectral", "spatial", "color"]
    assert cfg.primitives[2].band == 4
    assert parse_config(format_config(cfg)) == cfg
    assert config_to_dict(cfg)["width"] == 2


@pytest.mark.parametrize("text,line", [
    ("[pipeline]\nwidth = 3\nbogus = 1\n", 3),
    ("[pipeline]\nwidth = three\n", 2),
    ("width = 3\n", 1),
    ("[pipeline]\n[warp]\n", 2),
    ("[spectral]\nsigma_max = 1\n", 2),
    ("[pipeline]\nwidth 3\n", 2),
])
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line


def test_additive_requires_enable():
    cfg = parse_config("[additive]\nenabled = true\nsigma_max = 0.1\n")
    assert cfg.additive_enabled and cfg.primitives[0].kind == "additive"
    assert parse_config("[additive]\nenabled = false\nsigma_max = 0.1\n").primitives == ()


def test_preset_in_config():
    assert parse_config("[pipeline]\npreset = large\n").primitives == large_preset().primitives
