"""Exception types raised across the package."""


class BiasLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BiasLabError, ValueError):
    pass


class ShapeMismatch(BiasLabError, ValueError):
    pass


class NotConjugateSymmetric(BiasLabError, ValueError):
    pass


class ZeroPredictor(BiasLabError, ValueError):
    pass


class PhaseSymmetryViolation(BiasLabError, RuntimeError):
    pass


class LossOverflow(BiasLabError, ArithmeticError):
    """An exponent in the exponential loss exceeded the clamp value."""


class Diverged(BiasLabError, RuntimeError):
    pass


class NonPositiveMargin(BiasLabError, ValueError):
    pass


class NonUnitMargin(BiasLabError, ValueError):
    pass


class EmptySupport(BiasLabError, ValueError):
    pass


class ZeroJacobianAction(BiasLabError, RuntimeError):
    pass


class DidNotConverge(BiasLabError, RuntimeError):
    pass


class GenerationFailed(BiasLabError, RuntimeError):
    pass


class ConfigError(BiasLabError, ValueError):
    pass
