class ParameterError(ValueError):
    """Invalid parameter value passed to a sampler or density."""


class ConsistencyError(RuntimeError):
    """Model state violates a structural invariant (corrupt path, count/support
    mismatch, empty forward support)."""
