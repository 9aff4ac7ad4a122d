"""Exception types shared across the package."""


class TTFlowError(Exception):
    """Base class for all package-specific errors."""


class InvalidShapeError(TTFlowError, ValueError):
    """Array or core shapes violate a structural precondition."""


class DomainBoundsError(TTFlowError, ValueError):
    """A point lies outside the grid box (no extrapolation is performed)."""


class NumericalDomainError(TTFlowError, ArithmeticError):
    """A computation produced or received a non-finite value."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class SamplingError(TTFlowError, RuntimeError):
    """A conditional density degenerated while drawing samples."""


class CertificateError(TTFlowError, RuntimeError):
    """A generated density could not satisfy the boundary-decay certificate."""


class DegenerateCostError(TTFlowError, ValueError):
    """A relative cost gap is undefined because the reference cost is zero."""


class ConfigError(TTFlowError, ValueError):
    """An experiment configuration failed validation."""
