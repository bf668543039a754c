"""Exception hierarchy shared across the package."""


class RscnError(Exception):
    """Base class for all package errors."""


class ContractViolation(RscnError, ValueError):
    """Caller broke a documented precondition (shapes, ranges)."""


class NumericalFailure(RscnError, ArithmeticError):
    """A linear-algebra routine failed to converge."""


class EmptyModel(RscnError):
    """Forward pass requested on a network with no hidden nodes."""


class DegenerateCandidate(RscnError):
    """Candidate node output is identically zero after weighting."""


class DeserializationError(RscnError):
    """A model file could not be decoded.

    Parameters
    ----------
    message : str
        Human readable reason.
    offset : int or None
        Byte offset in the source where decoding failed, if known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataError(RscnError):
    """Base for dataset ingestion problems."""


class ParseError(DataError):
    """Malformed CSV content. ``row`` and ``col`` are 1-based."""

    def __init__(self, message, row=None, col=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if col is not None:
            loc.append(f"col {col}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.col = col


class DataIOError(DataError, OSError):
    """Data source missing or unreadable, or report sink unwritable."""
