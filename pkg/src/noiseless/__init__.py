"""Noiseless subsystems of multiphoton optical states under collective depolarization."""

from .errors import DomainError, EmptySectorError, ResourceError
from .multiplicity import (
    OccupancyMode,
    SectorKey,
    SpinLabel,
    general_multiplicity,
    is_hybrid,
    message_count,
    optimal_spin,
    oracle_multiplicity,
    qubit_ensemble_multiplicity,
    restricted_multiplicity,
    tensor_product_spins,
    weight_count,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EmptySectorError",
    "ResourceError",
    "OccupancyMode",
    "SectorKey",
    "SpinLabel",
    "general_multiplicity",
    "is_hybrid",
    "message_count",
    "optimal_spin",
    "oracle_multiplicity",
    "qubit_ensemble_multiplicity",
    "restricted_multiplicity",
    "tensor_product_spins",
    "weight_count",
    "__version__",
]
