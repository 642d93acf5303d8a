"""Exception hierarchy shared by every module.

The CLI maps :class:`ValidationError` to exit status 2 and
:class:`ResourceBudgetError` to exit status 3.
"""


class RestrictLabError(Exception):
    """Base class for all package errors."""


class ValidationError(RestrictLabError, ValueError):
    """Bad input: wrong shape, out-of-range parameter, malformed config."""


class DomainError(ValidationError):
    """A point or set lies outside the domain it must live in."""


class ConstructionError(RestrictLabError):
    """A derived object (covering box, triangulation) could not be built."""


class DegenerateInputError(ValidationError):
    """Zero-volume polytope, empty sublevel set, singular map."""


class SingularIntegrandError(RestrictLabError):
    """An integrand blows up on the integration domain."""


class ResourceBudgetError(RestrictLabError):
    """A quadrature or sampling budget cap was exceeded."""

    def __init__(self, message, at=None):
        super().__init__(message)
        self.at = at
