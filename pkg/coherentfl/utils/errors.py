"""
Domain exceptions for the simulator.

Every error carries a human-readable ``detail`` and the process ``exit_code`` the command line
reports for it; the HTTP layer maps them onto status codes.
"""
from typing import Optional


class CoherentFLError(Exception):
    """Base class for all simulator errors."""

    exit_code: int = 1
    status_code: int = 500

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigurationError(CoherentFLError):
    """Invalid experiment or frame configuration."""

    exit_code = 2
    status_code = 422


class DomainError(CoherentFLError):
    """Argument outside the mathematical domain of an operation (negative variance, ...)."""

    exit_code = 2
    status_code = 422


class DimensionError(CoherentFLError):
    """Inconsistent matrix or vector dimensions."""

    exit_code = 2
    status_code = 422


class PowerConstraintError(CoherentFLError):
    """Transmit powers exceed the frame power budget."""

    exit_code = 2
    status_code = 422

    def __init__(self, detail: str, excess: float):
        super().__init__(detail)
        self.excess = excess


class InfeasibleBudgetError(CoherentFLError):
    """The optimal allocation would need a negative pilot power."""

    exit_code = 2
    status_code = 422

    def __init__(self, detail: str, minimum_rho: float):
        super().__init__(detail)
        self.minimum_rho = minimum_rho


class SchedulingError(CoherentFLError):
    """The device pool cannot fill the requested cohort."""

    exit_code = 2
    status_code = 422

    def __init__(self, detail: str, device_class: str):
        super().__init__(detail)
        self.device_class = device_class


class IdxParseError(CoherentFLError):
    """Malformed IDX payload."""

    exit_code = 2
    status_code = 422

    def __init__(self, detail: str, offset: int):
        super().__init__(f"{detail} (at byte offset {offset})")
        self.offset = offset


class IdxMagicError(IdxParseError):
    pass


class IdxTruncatedError(IdxParseError):
    pass


class IdxDimensionOverflowError(IdxParseError):
    pass


class TrainingDivergenceError(CoherentFLError):
    """Local SGD produced a non-finite gradient."""

    def __init__(self, detail: str, device_id: Optional[int], step: int, grad_norm: float):
        super().__init__(detail)
        self.device_id = device_id
        self.step = step
        self.grad_norm = grad_norm


class PowerIterationError(CoherentFLError):
    """Power iteration did not converge."""


class CheckFailure(CoherentFLError):
    """One or more validation checks failed."""

    exit_code = 1

    def __init__(self, detail: str, failures: Optional[list] = None):
        super().__init__(detail)
        self.failures = failures or []
