"""
Exception hierarchy for selgauss

Library code raises these; the command layer turns them into responses and
main.py maps them to exit codes (ConfigError -> 2, NumericalError -> 3).
"""
from typing import Optional


class SelgaussError(Exception):
    """Base class for all selgauss errors"""


class ConfigError(SelgaussError):
    """Invalid or unknown configuration"""


class ParameterDomainError(SelgaussError, ValueError):
    """A model parameter or input lies outside its domain"""


class NumericalError(SelgaussError):
    """Base class for failures of the numerical machinery"""


class LinearAlgebraError(NumericalError):
    """A covariance could not be factorized even after maximal jitter"""


class NumericUnderflowError(NumericalError):
    """All importance weights underflowed to zero"""

    def __init__(self, message: str, largest_log_weight: Optional[float] = None):
        super().__init__(message)
        self.largest_log_weight = largest_log_weight


class SamplerInitializationError(NumericalError):
    """No initial state inside the selection set was found"""


class ChainDiagnosticsError(NumericalError):
    """A chain violated a hard diagnostic (zero acceptance, state outside A)"""
