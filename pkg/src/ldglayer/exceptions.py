class ValidationError(ValueError):
    """Raised when user-supplied parameters or data are invalid."""


class SolverError(RuntimeError):
    """Raised when the linear solve fails or violates its residual contract."""
