"""Exception hierarchy shared by all isochron modules."""


class IsochronError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(IsochronError, ValueError):
    """A family or solver parameter violates its admissible range."""


class DomainError(IsochronError, ValueError):
    """A coordinate lies outside the domain of a potential."""

    def __init__(self, message, boundary=None):
        super().__init__(message)
        self.boundary = boundary


class EnergyRangeError(IsochronError, ValueError):
    """An energy exceeds the range supported by a finite-domain potential."""

    def __init__(self, message, e_max=None):
        super().__init__(message)
        self.e_max = e_max


class NumericalError(IsochronError, ArithmeticError):
    """A quadrature or root search failed to reach its tolerance."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class SolverError(NumericalError):
    """An eigenvalue or quantisation root could not be located."""

    def __init__(self, message, level=None, error_estimate=None):
        super().__init__(message, error_estimate)
        self.level = level


class SingularIntegrandError(NumericalError):
    """|S| reaches 1 inside an integration range."""


class NotApplicableError(IsochronError, ValueError):
    """The requested quantity is not defined for this input."""


class InadmissibleError(IsochronError, ValueError):
    """A prescribed I2(E) does not correspond to any admissible shear."""

    def __init__(self, message, v=None):
        super().__init__(message)
        self.v = v
