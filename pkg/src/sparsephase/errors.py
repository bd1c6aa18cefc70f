"""Package-level exception types."""

__all__ = ["NumericalError"]


class NumericalError(RuntimeError):
    """A solver produced non-finite iterates."""
