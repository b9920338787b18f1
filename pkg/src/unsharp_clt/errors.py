"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Raised when an argument violates a documented precondition."""


class Unsupported(InvalidInput):
    """Raised for inputs outside the supported domain (e.g. non-qubit POVMs)."""


class NumericFailure(RuntimeError):
    """Raised when a numerical self-check (probability conservation etc.) fails."""


class ResourceLimit(RuntimeError):
    """Raised when a request exceeds a hard size cap."""
