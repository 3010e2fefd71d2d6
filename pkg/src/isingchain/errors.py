"""Exception types raised across the package."""


class IsingChainError(Exception):
    """Base class for all package errors."""


class DomainError(IsingChainError, ValueError):
    """An argument lies outside the documented domain."""


class IntegrationError(IsingChainError, ArithmeticError):
    """The integrator produced a non-finite state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnreachableTargetError(IsingChainError):
    """No shooting parameter in the scanned bracket reaches the target."""

    def __init__(self, message, bracket=None, endpoint_residuals=None):
        super().__init__(message)
        self.bracket = bracket
        self.endpoint_residuals = endpoint_residuals


class SegmentSolveError(IsingChainError):
    """A chain segment could not be solved during planning."""

    def __init__(self, message, segment=None, beta_in=None, beta_out=None):
        super().__init__(message)
        self.segment = segment
        self.beta_in = beta_in
        self.beta_out = beta_out


class ParseError(IsingChainError, ValueError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
