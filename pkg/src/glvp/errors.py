"""Exception hierarchy shared by every module."""


class GLVError(Exception):
    """Base class for all errors raised by glvp."""


class SingularMatrix(GLVError):
    pass


class NotSkewSymmetric(GLVError):
    pass


class CannotComplete(GLVError):
    pass


class DimensionMismatch(GLVError):
    pass


class InvalidSystem(GLVError):
    """The (B, A, lambda) data do not describe a valid GLV system."""


class DomainError(GLVError):
    """A point or parameter lies outside the open positive orthant."""


class NotDecoupledForm(GLVError):
    pass


class InsufficientDegeneracy(GLVError):
    pass


class InvalidFactorization(GLVError):
    pass


class ChartMismatch(GLVError):
    pass


class BlowUp(GLVError):
    """Log-coordinates left the representable range during integration."""


class StepUnderflow(GLVError):
    pass
