"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class BetaDelaunayError(Exception):
    """Base class for package errors."""


class DomainError(BetaDelaunayError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedOrderError(DomainError):
    """Requested derivative or cumulant order is above the supported maximum."""


class ConfigurationError(BetaDelaunayError, ValueError):
    """Invalid run configuration (CLI flags, budgets, windows)."""


class DegenerateSimplexError(BetaDelaunayError):
    """Vertices are affinely dependent, so circumsphere or shape is undefined."""


class LowAcceptanceError(BetaDelaunayError):
    """A rejection sampler fell below its acceptance-rate floor."""


class EmptySelectionError(BetaDelaunayError):
    """A conditioning event selected no samples."""


class DegenerateConfigurationError(BetaDelaunayError):
    """Weighted points are not in general position."""


class CertificateError(BetaDelaunayError):
    """A window-completeness certificate could not be established."""
