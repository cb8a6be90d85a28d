"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments; the classes below mark
failure modes that callers (in particular the command line front end)
need to tell apart.
"""


class NumericError(RuntimeError):
    """A simulation or linear solve produced non-finite or unusable values."""


class BracketError(RuntimeError):
    """An edge-of-chaos bracket does not contain a sign change.

    Carries the measured exponents at the bracket endpoints so the caller
    can widen the bracket sensibly.
    """

    def __init__(self, message, cle_lo=None, cle_hi=None):
        super().__init__(message)
        self.cle_lo = cle_lo
        self.cle_hi = cle_hi


class CsvParseError(ValueError):
    """A CSV file could not be parsed; names the offending row/column (1-based)."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
