"""Exception types shared across the package."""


class SolverError(Exception):
    """Base class for all package-specific errors."""


class InvalidProblem(SolverError):
    """Problem data violates a structural contract."""


class DimensionMismatch(InvalidProblem):
    """Array shapes are inconsistent."""


class InvertedBound(InvalidProblem):
    """A lower bound exceeds the matching upper bound."""


class NonFiniteData(InvalidProblem):
    """NaN, or an infinity on the wrong side of a bound pair, in problem data."""


class ZeroMatrix(SolverError):
    """Operation undefined on an all-zero matrix."""


class TooLarge(SolverError):
    """Problem exceeds the oracle size caps."""


class EmptyInput(SolverError):
    """An aggregate operation received no data."""


class ParseError(SolverError):
    """Malformed instance file."""

    def __init__(self, message, line=None, section=None):
        detail = message
        if section is not None:
            detail = f"[{section}] {detail}"
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line
        self.section = section


class UnsupportedSection(ParseError):
    """Instance file uses a feature outside the supported subset."""
