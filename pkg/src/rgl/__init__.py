"""Adversarial geometry, margin profiling and max-entropy augmentation on numpy."""
from .attacks import (AttackResult, BoxBounds, deepfool, deepfool_subspace, linear_solver,
                      perceptibility_bounds, sparsefool)
from .errors import (ConfigError, DegenerateDirectionError, FormatError, ParameterError,
                     RGLError, TrainingError)
from .kernels import BACKEND
from .margins import MarginRecord, margin_profile
from .models import Classifier, grad_check, train
from .prime import PrimeConfig, augment, augment_dataset_offline, prime_augment, prime_beta_augment
from .rng import RngStream, random_orthonormal, rng_stream
from .spectral import SubspaceSpec, dct2, freq_flip, idct2
from .synthetic import SyntheticDataset, gen_t1, gen_t2

__version__ = "0.1.0"

__all__ = [
    "AttackResult", "BACKEND", "BoxBounds", "Classifier", "ConfigError",
    "DegenerateDirectionError", "FormatError", "MarginRecord", "ParameterError", "PrimeConfig",
    "RGLError", "RngStream", "SubspaceSpec", "SyntheticDataset", "TrainingError", "augment",
    "augment_dataset_offline", "dct2", "deepfool", "deepfool_subspace", "freq_flip", "gen_t1",
    "gen_t2", "grad_check", "idct2", "linear_solver", "margin_profile", "perceptibility_bounds",
    "prime_augment", "prime_beta_augment", "random_orthonormal", "rng_stream", "sparsefool",
    "train",
]
