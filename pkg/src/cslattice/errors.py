"""Exception hierarchy shared by every module of the package."""


class CSLatticeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CSLatticeError, ValueError):
    pass


class SiteIndexError(CSLatticeError, IndexError):
    pass


class ShapeError(CSLatticeError, ValueError):
    pass


class DomainError(CSLatticeError, ValueError):
    """Input outside the domain on which an operation is defined."""


class IntegrationError(CSLatticeError, RuntimeError):
    """The adaptive integrator could not reach the requested time.

    ``t_reached`` is the last time the solver successfully advanced to;
    ``partial`` holds the samples computed before the failure, if any.
    """

    def __init__(self, message, t_reached, partial=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.partial = partial


class BracketingError(CSLatticeError, RuntimeError):
    pass


class CutoffError(CSLatticeError, ValueError):
    """Fock-space cutoff too small for the requested coherent state."""

    def __init__(self, message, tail_mass):
        super().__init__(message)
        self.tail_mass = tail_mass


class NumericalDegeneracyError(CSLatticeError, ArithmeticError):
    pass


class ConfigError(CSLatticeError, ValueError):
    pass
