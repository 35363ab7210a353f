"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """Base class for failures that map to CLI exit code 3."""


class TruncationError(NumericalError):
    """Fock-space truncation is no longer negligible."""


class ExpmOverflowError(NumericalError, OverflowError):
    """A matrix exponential produced entries beyond the overflow guard."""


class StepSizeUnderflow(NumericalError):
    """The adaptive integrator needed a step below its floor."""


class ConditioningError(NumericalError):
    """An interaction-picture construction was requested past its safe t*gamma bound."""


class DegenerateGamma(NumericalError, ValueError):
    """|Gamma| is numerically zero, so the long-time limits do not exist."""


class RankDeficiency(NumericalError):
    """A least-squares commutator solve left a large residual."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ConfigError(ValueError):
    """Base class for failures that map to CLI exit code 2."""


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
