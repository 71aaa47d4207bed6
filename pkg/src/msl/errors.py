"""Exception types shared across the package."""


class BodyDefinitionError(ValueError):
    """The convex-body description is invalid (non-positive support values,
    wrong dimension, or an operation that needs strict convexity/smoothness
    was called on a body without it)."""


class InfiniteZeroCountError(ArithmeticError):
    """A slice or line lies inside a zero set, so the intersection count is
    infinite.  Estimators catch this and resample; it is never averaged."""


class CertificateFailure(RuntimeError):
    """The spectrum certificate failed (possibly after all retries)."""
