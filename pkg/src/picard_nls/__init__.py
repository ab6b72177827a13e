"""Pseudospectral multiscale integrators for weakly nonlinear Schrodinger dynamics."""

__version__ = "0.1.0"

from .config import SchemeConfig
from .errors import (BranchCutError, ConfigError, ContractViolationError,
                     UnsupportedRegimeError)
from .spectral import (CutoffProfile, Grid, SpectralField, apply_projector,
                       field_from_function, filtered_flow, free_flow, gradient,
                       l2_error, l2_norm, laplacian, to_frequency, to_physical)

__all__ = [
    "__version__", "SchemeConfig", "Grid", "SpectralField", "CutoffProfile",
    "to_frequency", "to_physical", "apply_projector", "free_flow",
    "filtered_flow", "l2_norm", "l2_error", "gradient", "laplacian",
    "field_from_function", "ContractViolationError", "ConfigError",
    "UnsupportedRegimeError", "BranchCutError",
]
