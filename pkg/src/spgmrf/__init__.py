"""Sparse binary pairwise MRF learning by stochastic proximal gradient with
Gibbs-sampled gradients and bound-driven choice of the number of sweeps."""

from .errors import CapacityError, DataError, InstrumentationError, InvalidInputError, UndefinedAUCError
from .model import Dataset, FeatureIndexer, ModelParams, soft_threshold
from .optimizer import SpgConfig, SpgResult, run_spg

__all__ = [
    "CapacityError",
    "DataError",
    "Dataset",
    "FeatureIndexer",
    "InstrumentationError",
    "InvalidInputError",
    "ModelParams",
    "SpgConfig",
    "SpgResult",
    "UndefinedAUCError",
    "run_spg",
    "soft_threshold",
]
__version__ = "0.1.0"
