"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so every numerical failure mode has its
own class rather than a bare ``ValueError``.
"""


class HermiteLabError(Exception):
    """Base class for all package errors."""


class ParameterError(HermiteLabError, ValueError):
    """An argument is outside its documented range."""


class ShapeError(HermiteLabError, ValueError):
    """Array shapes do not match the basis, grid or index set."""


class DataError(HermiteLabError, ValueError):
    """Input data contains non-finite values."""


class SingularTimeError(HermiteLabError):
    """Kernel evaluation requested too close to t = k*pi/2."""


class AccuracyError(HermiteLabError):
    """An extrapolation or quadrature did not reach its tolerance."""


class DegenerateSystemError(HermiteLabError):
    """Schatten norm of the weights is zero."""


class RegimeError(HermiteLabError):
    """Coherent-state parameters are outside the asymptotic regime."""


class ResolutionError(AccuracyError):
    """Truncated basis loses too much trace of the operator."""


class BandLimitError(AccuracyError):
    """Evolved state leaks out of the representable band."""


class InstabilityError(HermiteLabError):
    """Time stepping produced NaN or overflow."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class ConfigError(HermiteLabError):
    """Experiment configuration failed validation."""
