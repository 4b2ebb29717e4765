"""Exception types shared across the package."""


class EntestError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(EntestError):
    """Dimension of an argument does not match the model or dataset."""


class EmptyDataError(EntestError):
    """An estimator was called on an empty dataset."""


class InvalidParamError(EntestError):
    """An estimator or generator parameter is outside its valid range."""


class UnreachableMassError(EntestError):
    """Requested probability mass exceeds the total mass of a bounded mixture."""


class GridTooSmallError(EntestError):
    """A property check needs at least two grid points."""


class ProblemTooLargeError(EntestError):
    """The combinatorial search would exceed the desk-scale guard."""


class InsufficientDataError(EntestError):
    """Not enough rows to fit the requested summary."""
