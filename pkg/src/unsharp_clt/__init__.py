"""Repeated unsharp qubit measurements: sampling, Gaussian-mixture limits and the separable/entangled game."""

__version__ = "0.1.0"

from ._kernels import backend
from .errors import InvalidInput, NumericFailure, ResourceLimit, Unsupported
from .povm import Povm, StateMoments, UnsharpnessProfile, moments, sigma_bounds_qubit, validate
from .sampler import TrialResult, brute_force_distribution, run_trials, sample_product, sample_separable, sample_symmetric
from .states import ProductState, SeparableState, SymmetricState, dicke_superposition
from .trine import trine_povm

__all__ = [
    "InvalidInput", "NumericFailure", "Povm", "ProductState", "ResourceLimit", "SeparableState",
    "StateMoments", "SymmetricState", "TrialResult", "UnsharpnessProfile", "Unsupported", "backend",
    "brute_force_distribution", "dicke_superposition", "moments", "run_trials", "sample_product",
    "sample_separable", "sample_symmetric", "sigma_bounds_qubit", "trine_povm", "validate",
]
