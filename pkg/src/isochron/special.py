"""Special functions: reciprocal gamma (Lanczos) and modified Bessel I0, I1.

The reciprocal gamma is returned either directly or in (sign, log|1/Gamma|)
form; the latter never overflows and is what root finders should use for
large negative arguments.
"""

import math

import numpy as np

# Godfrey's coefficients, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_lgamma(z):
    """log Gamma(z) for z >= 0.5."""
    z = z - 1.0
    a = _LANCZOS_P[0]
    t = z + _LANCZOS_G + 0.5
    for i in range(1, len(_LANCZOS_P)):
        a += _LANCZOS_P[i] / (z + i)
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(a)


def sinpi(z):
    """sin(pi z) with exact argument reduction."""
    k = math.floor(z + 0.5)
    r = z - k
    s = math.sin(math.pi * r)
    return -s if k % 2 else s


def log_rgamma(z):
    """Return ``(sign, log|1/Gamma(z)|)`` for real ``z``.

    At the poles of Gamma (z = 0, -1, -2, ...) the reciprocal vanishes and
    ``(0.0, -inf)`` is returned.
    """
    z = float(z)
    if z >= 0.5:
        return 1.0, -_lanczos_lgamma(z)
    # 1/Gamma(z) = Gamma(1 - z) sin(pi z) / pi
    s = sinpi(z)
    if s == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, s), _lanczos_lgamma(1.0 - z) + math.log(abs(s)) - math.log(math.pi)


def rgamma(z):
    """Reciprocal gamma function 1/Gamma(z); entire, so zero at the poles.

    Accepts scalars or arrays. Values whose magnitude exceeds the double range
    come back as +-inf; use :func:`log_rgamma` when that matters.
    """
    if np.ndim(z) == 0:
        sign, logabs = log_rgamma(z)
        if sign == 0.0:
            return 0.0
        return sign * math.exp(logabs) if logabs < 709.0 else sign * math.inf
    out = np.empty(np.shape(z))
    for idx, zi in np.ndenumerate(np.asarray(z, dtype=float)):
        out[idx] = rgamma(zi)
    return out


def gamma(z):
    """Gamma(z) via the reciprocal; raises at the poles."""
    r = rgamma(z)
    if np.any(np.asarray(r) == 0.0):
        raise ZeroDivisionError("Gamma has a pole at non-positive integers")
    return 1.0 / r


def _bessel_i_series(n, z):
    # all terms positive, no cancellation
    half = 0.5 * z
    term = half**n / math.factorial(n)
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if term <= 1e-17 * total:
            return total


def _bessel_i_asymptotic(n, z):
    # A&S 9.7.1
    mu = 4.0 * n * n
    term = 1.0
    total = 1.0
    for k in range(1, 30):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        total += term
        if abs(term) < 1e-17:
            break
    return math.exp(z) / math.sqrt(2.0 * math.pi * z) * total


def bessel_i(n, z):
    """Modified Bessel function of the first kind I_n(z), n in {0, 1, ...}, z >= 0."""
    if np.ndim(z) != 0:
        return np.array([bessel_i(n, zi) for zi in np.ravel(z)]).reshape(np.shape(z))
    z = float(z)
    if z < 0:
        raise ValueError("bessel_i is implemented for z >= 0 only")
    if z < 60.0:
        return _bessel_i_series(n, z)
    return _bessel_i_asymptotic(n, z)


def bessel_i0(z):
    return bessel_i(0, z)


def bessel_i1(z):
    return bessel_i(1, z)
