"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented invariant (bad distribution, plan, event...)."""


class DomainError(ValidationError):
    """A relation is undefined for the given arguments."""


class UsageError(RuntimeError):
    """An operation was applied to an object in the wrong state."""


class CapacityError(RuntimeError):
    """Exact enumeration would exceed the configured size cap."""


class ConsistencyError(AssertionError):
    """An internal cross-check failed. Indicates a bug, never bad input."""
