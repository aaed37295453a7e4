"""Exception types shared across the package."""


class WeakGordonError(Exception):
    """Base class for all package errors."""


class DomainError(WeakGordonError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(WeakGordonError, ValueError):
    """A measure representation or input file violates its invariants."""


class RepresentationError(WeakGordonError):
    """A result cannot be represented within the degree/subdivision budget."""


class ToleranceError(WeakGordonError, RuntimeError):
    """A certified computation could not reach the requested tolerance."""


class ResourceError(WeakGordonError, RuntimeError):
    """A computation would exceed a configured resource budget."""
