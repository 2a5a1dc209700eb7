"""Typical cells of beta-Delaunay tessellations: moments, cumulants, sampling and tessellation."""

from .errors import (BetaDelaunayError, CertificateError, ConfigurationError,
                     DegenerateConfigurationError, DegenerateSimplexError, DomainError,
                     EmptySelectionError, LowAcceptanceError, UnsupportedOrderError)
from .model import (ModelParams, cumulant, cumulant_value, ldp_scaled_cgf, log_volume_moment,
                    mod_gaussian_frame, mod_gaussian_residual, volume_moment)
from .sampler import RngStream, sample_cell, sample_cells, sample_log_volumes

__version__ = "0.1.0"

__all__ = [
    "BetaDelaunayError", "CertificateError", "ConfigurationError", "DegenerateConfigurationError",
    "DegenerateSimplexError", "DomainError", "EmptySelectionError", "LowAcceptanceError",
    "UnsupportedOrderError", "ModelParams", "cumulant", "cumulant_value", "ldp_scaled_cgf",
    "log_volume_moment", "mod_gaussian_frame", "mod_gaussian_residual", "volume_moment",
    "RngStream", "sample_cell", "sample_cells", "sample_log_volumes",
]
