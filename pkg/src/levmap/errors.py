"""Exception types shared across the workbench."""


class LevmapError(Exception):
    """Base class for all workbench errors."""


class DomainError(LevmapError):
    """Argument outside the mathematical domain of an operation."""


class InadmissibleError(LevmapError):
    """Parameter combination violates the map's admissibility condition."""


class SingularError(LevmapError):
    """Evaluation requested at a singular point (e.g. the critical point)."""


class ConvergenceError(LevmapError):
    """Iterative scheme failed to reach the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateError(LevmapError):
    """Input is degenerate for the requested statistic."""


class NumericalError(LevmapError):
    """A state update produced a non-finite value."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class TooShortError(LevmapError):
    """Time series shorter than the operation requires."""


class ParseError(LevmapError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class SchemaError(LevmapError):
    """Input file does not match the declared schema."""


class EmptyAfterFilterError(LevmapError):
    """Filtering removed every series."""
