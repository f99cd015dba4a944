"""Split-harmonic oscillator: exact levels from reciprocal gammas and their asymptotics.

Two half-parabolas with frequencies omega_l = rho * omega_r meet at the
origin; the oscillation frequency is omega = 2 omega_l omega_r / (omega_l + omega_r).
Writing E = (nu + 1/2) omega and x = (nu + 1/2) / (1 + rho), the levels are
the roots of

    sqrt(rho) / [Gamma(3/4 - rho x) Gamma(1/4 - x)] + 1 / [Gamma(1/4 - rho x) Gamma(3/4 - x)].
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .eigen import SpectrumRecord
from .errors import NotApplicableError, ParameterError, SolverError
from .special import log_rgamma


@dataclass(frozen=True)
class SplitHarmonicSpec:
    """Frequency ratio rho = omega_l / omega_r and isochronous frequency omega.

    rho > 1 describes the mirror image of the rho -> 1/rho potential and has
    the same spectrum; it is folded on construction and ``mirrored`` records it.
    """

    rho: float
    omega: float = 1.0
    mirrored: bool = False

    def __post_init__(self):
        if not (self.rho >= 0.0) or not math.isfinite(self.rho):
            raise ParameterError(f"rho must be a finite non-negative number, got {self.rho}")
        if self.omega <= 0.0:
            raise ParameterError("omega must be positive")
        if self.rho > 1.0:
            object.__setattr__(self, "rho", 1.0 / self.rho)
            object.__setattr__(self, "mirrored", not self.mirrored)

    @classmethod
    def from_xi(cls, xi, omega=1.0):
        """Spec with xi = (1 - rho) / (1 + rho)."""
        if not -1.0 < xi <= 1.0:
            raise ParameterError("xi must lie in (-1, 1]")
        return cls((1.0 - xi) / (1.0 + xi), omega)


def _terms(x, rho):
    """Both terms of the residual as (sign, log|value|) pairs."""
    s1, l1 = log_rgamma(0.75 - rho * x)
    s2, l2 = log_rgamma(0.25 - x)
    s3, l3 = log_rgamma(0.25 - rho * x)
    s4, l4 = log_rgamma(0.75 - x)
    first = (s1 * s2, l1 + l2 + 0.5 * math.log(rho) if rho > 0 else -math.inf)
    if rho == 0.0:
        first = (0.0, -math.inf)
    return first, (s3 * s4, l3 + l4)


def qc_residual(x, rho, scaled=False):
    """Left-hand side of the split-harmonic quantisation condition.

    With ``scaled=True`` the value is divided by the larger of the two terms'
    magnitudes; the sign and zeros are unchanged and nothing overflows, which
    is what root searches use. The unscaled value overflows to +-inf once
    the reciprocal gammas leave the double range (|arguments| beyond ~170).
    """
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise ParameterError("qc_residual expects 0 <= rho <= 1")
    (sa, la), (sb, lb) = _terms(float(x), rho)
    if sa == 0.0 and sb == 0.0:
        return 0.0
    top = max(la, lb)
    shift = top if scaled else 0.0
    if not scaled and top > 709.0:
        # still report the dominant sign
        big = sa if la >= lb else sb
        return math.copysign(math.inf, big)
    value = 0.0
    if sa != 0.0:
        value += sa * math.exp(la - shift)
    if sb != 0.0:
        value += sb * math.exp(lb - shift)
    return value


def _scan_roots(rho, x_top, step):
    xs = np.arange(0.0, x_top + step, step)
    vals = np.array([qc_residual(x, rho, scaled=True) for x in xs])
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(brentq(lambda x: qc_residual(x, rho, scaled=True), a, b, xtol=1e-15, rtol=1e-15))
    return roots


def exact_levels(spec: SplitHarmonicSpec, n_max):
    """Levels E_0..E_n_max from the roots of the quantisation condition."""
    rho, omega = spec.rho, spec.omega
    n_max = int(n_max)
    if rho == 0.0:
        return [SpectrumRecord(n, (n + 0.75) * omega, "exact", 0.0) for n in range(n_max + 1)]
    # every level lies within omega/4 of (n + 1/2) omega, so this range holds n_max + 1 roots
    x_top = (n_max + 1.25) / (1.0 + rho)
    step = 1.0 / (8.0 * (1.0 + rho))
    for _ in range(3):
        roots = _scan_roots(rho, x_top, step)
        if len(roots) >= n_max + 1:
            break
        step *= 0.5
    else:
        raise SolverError(f"found {len(roots)} roots below x={x_top:.6g}, expected {n_max + 1}; scan too coarse",
                          level=len(roots))
    return [SpectrumRecord(n, (1.0 + rho) * x * omega, "exact", None) for n, x in enumerate(roots[: n_max + 1])]


def _turns(n, rho):
    """Fractional parts of (n + 1/2)/(1 + rho) and rho (n + 1/2)/(1 + rho), exactly."""
    half = Fraction(2 * int(n) + 1, 2)
    a = half / (1 + Fraction(rho))
    b = half - a
    return float(a - math.floor(a)), float(b - math.floor(b))


def _chi_amplitude(rho):
    if rho <= 0.0:
        raise NotApplicableError("the asymptotic correction is singular at rho = 0")
    return (1.0 + rho) ** 3 * (1.0 - rho) / (128.0 * math.pi * rho * rho)


def chi_asymptotic(n, rho):
    """Amplitude chi_n of the (n + 1/2)^-2 correction to the split-harmonic levels."""
    rho = float(rho)
    if rho > 1.0:
        rho = 1.0 / rho
    a, _ = _turns(n, rho)
    return -_chi_amplitude(rho) * math.cos(2.0 * math.pi * a)


def chi_asymptotic_alt(n, rho):
    """Same quantity written with the rho-scaled angle and the opposite sign."""
    rho = float(rho)
    if rho > 1.0:
        rho = 1.0 / rho
    _, b = _turns(n, rho)
    return _chi_amplitude(rho) * math.cos(2.0 * math.pi * b)


def levels_asymptotic(n, rho, omega=1.0, warn=True):
    """E_n ~ [n + 1/2 + chi_n / (n + 1/2)^2] omega, valid for rho n >> 1."""
    rho = float(rho)
    if rho > 1.0:
        rho = 1.0 / rho
    if warn and rho * n < 1.0:
        warnings.warn(f"rho*n = {rho * n:.3g} is not large; the asymptotic level is unreliable",
                      RuntimeWarning, stacklevel=2)
    nh = n + 0.5
    return (nh + chi_asymptotic(n, rho) / (nh * nh)) * omega
