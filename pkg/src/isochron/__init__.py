"""Isochronous potentials: shear-function construction, WKB corrections and exact spectra."""

from .errors import (DomainError, EnergyRangeError, InadmissibleError, IsochronError, NotApplicableError,
                     NumericalError, ParameterError, SingularIntegrandError, SolverError)
from .potentials import (Custom, FamilyI, FamilyII, Harmonic, IsochronousPotential, Isotonic, SplitHarmonic, Urabe,
                         build_potential, classical_period, scale, turning_points)

__version__ = "0.1.0"

__all__ = [
    "Custom", "DomainError", "EnergyRangeError", "FamilyI", "FamilyII", "Harmonic", "InadmissibleError",
    "IsochronError", "IsochronousPotential", "Isotonic", "NotApplicableError", "NumericalError", "ParameterError",
    "SingularIntegrandError", "SolverError", "SplitHarmonic", "Urabe", "build_potential", "classical_period",
    "scale", "turning_points", "__version__",
]
