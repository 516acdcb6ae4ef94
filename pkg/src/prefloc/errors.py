"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ValidationError -> 2, NumericalFault -> 3.
"""


class PreflocError(Exception):
    """Base class for package errors."""


class ValidationError(PreflocError):
    """Malformed input data, violated invariants, or bad configuration."""


class EnumerationCapError(ValidationError):
    """Exhaustive enumeration refused because C(m, p) exceeds the cap."""


class NumericalFault(PreflocError):
    """A numeric contract was violated (division by zero, undefined metric)."""
