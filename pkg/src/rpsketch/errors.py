"""Exception types shared across the package."""


class RpsketchError(Exception):
    """Base class for all package errors."""


class ShapeError(RpsketchError):
    """Operands have incompatible dimensions or sketch lengths."""


class DomainError(RpsketchError):
    """Input is outside the mathematical domain of an operation."""


class ConfigError(RpsketchError):
    """A configuration object violates its invariants."""


class ContractError(RpsketchError):
    """An operation was asked to do something its contract excludes."""


class DegenerateInputError(RpsketchError):
    """Data carries no information for the requested estimate."""


class SparseTextError(RpsketchError):
    """Malformed sparse text input.

    Carries the 1-based line number where the problem was found.
    """

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SketchFormatError(RpsketchError):
    """Corrupt or unsupported sketch file."""
