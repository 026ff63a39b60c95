"""Exception types shared across the package.

The CLI maps these onto exit codes, so keep the hierarchy flat.
"""


class InvalidInputError(ValueError):
    """Bad argument value or shape mismatch."""


class CapacityError(ValueError):
    """Problem too large for brute-force enumeration."""


class DataError(ValueError):
    """Malformed data file or schema violation."""


class UndefinedAUCError(ValueError):
    """ROC AUC requested with no positive or no negative labels."""


class InstrumentationError(RuntimeError):
    """A trace lacks the exact-oracle fields an analysis needs."""
