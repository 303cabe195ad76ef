"""
Error types raised by the PINN library.

Everything derives from PinnError so callers (management commands, the sweep
runner) can catch library failures in one place.
"""


class PinnError(Exception):
    """Base class for all library errors."""


class ConfigurationError(PinnError, ValueError):
    """Network config and parameter vector disagree, or the config is invalid."""


class ParameterError(PinnError, ValueError):
    """Invalid ODE-system, solver or collocation parameter."""


class NumericalOverflowError(PinnError, ArithmeticError):
    """A loss or gradient evaluated to a non-finite value."""

    def __init__(self, message, param_norm=None):
        super().__init__(message)
        self.param_norm = param_norm


class DivergenceError(NumericalOverflowError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, iteration=None, param_norm=None):
        super().__init__(message, param_norm=param_norm)
        self.iteration = iteration


class StiffnessError(PinnError, ArithmeticError):
    """Adaptive step size fell below the underflow limit."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UndefinedMetricError(PinnError, ValueError):
    """Relative error requested against a zero-norm reference."""


class ConfigParseError(PinnError, ValueError):
    """Sweep configuration document could not be parsed or validated."""

    def __init__(self, message, key=None, line=None):
        location = []
        if line is not None:
            location.append(f'line {line}')
        if key is not None:
            location.append(f'key {key!r}')
        prefix = f"{', '.join(location)}: " if location else ''
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class EmptyInputError(PinnError, ValueError):
    """Summary requested for a results file without rows."""
