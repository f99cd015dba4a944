"""Abel transforms, Mellin asymptotics and the I2 -> shear inverse problem.

The forward transform is (1/sqrt(pi)) int_0^E g(v) (E - v)^(-1/2) dv. With
v = E sin^2(theta) it becomes 2 sqrt(E/pi) int_0^(pi/2) g(E sin^2 theta)
sin(theta) dtheta, which has no endpoint singularity.
"""

from dataclasses import dataclass
import functools
import math
from typing import NamedTuple
import warnings

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import integrate, optimize

from .errors import InadmissibleError, NotApplicableError, NumericalError, SolverError
from .shear import ShearFunction, family_ii_shear
from .special import rgamma
from . import wkb

SQRT_PI = math.sqrt(math.pi)
OMEGA_REF = math.sqrt(2.0)


@dataclass(frozen=True)
class MellinCoefficients:
    m21: float
    m22: float
    m41: float
    omega_ref: float = OMEGA_REF


@dataclass(frozen=True)
class AbelPair:
    """Sampled source g(v) and its forward Abel transform F(E)."""

    grid: np.ndarray
    source: np.ndarray
    forward: np.ndarray
    kernel_exponent: float = 0.5

    @classmethod
    def from_source(cls, g, grid):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(g(grid), dtype=float), abel_forward(g, grid))


def _quad(f, a, b, **kw):
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400)
    opts.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(f, a, b, **opts)
        except integrate.IntegrationWarning:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, **opts)
            if err > 1e-8 * max(1.0, abs(val)):
                raise NumericalError("quadrature did not converge", error_estimate=err)
            return val, err


# -- Abel transforms ------------------------------------------------------------------


def abel_forward(g, E):
    """(1/sqrt(pi)) int_0^E g(v) (E - v)^(-1/2) dv."""

    def one(Ei):
        if Ei == 0.0:
            return 0.0
        val, _ = _quad(lambda t: float(g(Ei * math.sin(t) ** 2)) * math.sin(t), 0.0, 0.5 * math.pi)
        return 2.0 * math.sqrt(Ei) * val / SQRT_PI

    if np.ndim(E) == 0:
        return one(float(E))
    return np.array([one(float(e)) for e in np.ravel(E)]).reshape(np.shape(E))


def _half_integral(F, v):
    # A(v) = int_0^v F(E) (v - E)^(-1/2) dE = 2 sqrt(v) int_0^(pi/2) F(v sin^2 t) sin t dt
    val, _ = _quad(lambda t: float(F(v * math.sin(t) ** 2)) * math.sin(t), 0.0, 0.5 * math.pi)
    return 2.0 * math.sqrt(v) * val


def abel_inverse(F, v, dF=None, rel_step=1e-3):
    """g(v) = (1/sqrt(pi)) d/dv int_0^v F(E) (v - E)^(-1/2) dE.

    With ``dF`` (the derivative of F) the v-derivative is taken under the
    integral; otherwise a 5-point central difference of the half-integral
    is used.
    """

    def one(vi):
        if vi <= 0.0:
            raise ValueError("abel_inverse needs v > 0")
        if dF is not None:
            k, _ = _quad(lambda t: float(F(vi * math.sin(t) ** 2)) * math.sin(t), 0.0, 0.5 * math.pi)
            kp, _ = _quad(lambda t: float(dF(vi * math.sin(t) ** 2)) * math.sin(t) ** 3, 0.0, 0.5 * math.pi)
            return (k / math.sqrt(vi) + 2.0 * math.sqrt(vi) * kp) / SQRT_PI
        h = rel_step * vi
        a = [_half_integral(F, vi + j * h) for j in (-2, -1, 1, 2)]
        deriv = (a[0] - 8.0 * a[1] + 8.0 * a[2] - a[3]) / (12.0 * h)
        return deriv / SQRT_PI

    if np.ndim(v) == 0:
        return one(float(v))
    return np.array([one(float(x)) for x in np.ravel(v)]).reshape(np.shape(v))


# -- inverse problem -------------------------------------------------------------------


def _bracket_kernel(f, v, df):
    # K(v) = int_0^1 s^2 f(v s) (1 - s)^(-1/2) ds and K'(v), with s = sin^2 t
    def kernel(w, func, power):
        val, _ = _quad(lambda t: float(func(w * math.sin(t) ** 2)) * 2.0 * math.sin(t) ** power,
                       0.0, 0.5 * math.pi)
        return val

    k = kernel(v, f, 5)
    if df is not None:
        return k, kernel(v, df, 7)
    h = 1e-3 * v
    ks = [kernel(v + j * h, f, 5) for j in (-2, -1, 1, 2)]
    return k, (ks[0] - 8.0 * ks[1] + 8.0 * ks[2] - ks[3]) / (12.0 * h)


def b_second_derivative_from_i2(i2, omega, v, di2=None):
    """B''(v) from a prescribed I2(E), B(v) = v / (1 - S^2(sqrt(2v)/omega))."""
    c = -12.0 * SQRT_PI / omega

    def f(E):
        return c * i2(E)

    df = (lambda E: c * di2(E)) if di2 is not None else None

    def one(vi):
        k, kp = _bracket_kernel(f, vi, df)
        return (2.5 * k + vi * kp) / SQRT_PI

    if np.ndim(v) == 0:
        return one(float(v))
    return np.array([one(float(x)) for x in np.ravel(v)]).reshape(np.shape(v))


def invert_i2_to_shear(i2, omega, x_max=10.0, degree=160, di2=None):
    """Recover the shear S(X) on |X| <= x_max whose I2(E) is ``i2``.

    B'' is interpolated by a Chebyshev series on [0, omega^2 x_max^2 / 2] and
    integrated twice with B(0) = 0, B'(0) = 1; then S^2 = W / (v + W) with
    W = B - v.
    """
    v_max = 0.5 * omega**2 * x_max**2

    def bpp(vs):
        return np.array([b_second_derivative_from_i2(i2, omega, float(v), di2) for v in np.ravel(vs)])

    series = Chebyshev.interpolate(bpp, degree, domain=[0.0, v_max])
    # W / v^2 = int_0^1 (1 - s) B''(v s) ds keeps full relative accuracy near v = 0
    nodes, weights = np.polynomial.legendre.leggauss(degree // 2 + 8)
    s_nodes, s_weights = 0.5 * (nodes + 1.0), 0.5 * weights * (1.0 - 0.5 * (nodes + 1.0))

    def w_over_v2(vs):
        vs = np.asarray(vs, dtype=float)
        return series(np.multiply.outer(vs, s_nodes)) @ s_weights

    ratio_series = Chebyshev.interpolate(w_over_v2, degree, domain=[0.0, v_max])
    check = np.linspace(0.0, v_max, 4001)[1:]
    w_vals = check**2 * ratio_series(check)
    bad = (w_vals < -1e-12 * np.maximum(1.0, check)) | (check + w_vals <= 0.0)
    if bad.any():
        v_bad = float(check[np.argmax(bad)])
        raise InadmissibleError(f"prescribed I2 gives B(v) <= v (S^2 < 0) near v={v_bad:.6g}", v=v_bad)

    def value(X):
        X = np.asarray(X, dtype=float)
        v = 0.5 * omega**2 * X * X
        vp = np.maximum(v * ratio_series(v), 0.0)
        return np.sign(X) * np.sqrt(vp / (1.0 + vp))

    sh = ShearFunction("recovered", value, expr=None, validity=(-x_max, x_max))
    if np.any(np.abs(sh.eval(np.linspace(0.0, x_max, 2001))) >= 1.0):
        raise InadmissibleError("recovered shear violates |S| < 1")
    return sh


# -- Mellin asymptotics ------------------------------------------------------------------


def mellin(f, x, u_split=1.0, u_tail0=32.0, max_doublings=12, rtol=1e-12):
    """M[f; x] = int_0^inf f(u) u^(x-1) du, split at u = 1 with a tail extrapolation."""

    def integrand(u):
        return float(f(u)) * u ** (x - 1.0)

    # divergence at the origin: u * integrand must vanish
    small = [abs(integrand(u)) * u for u in (1e-10, 1e-8, 1e-6)]
    if small[0] > 0 and not (small[0] <= small[1] * 1.0001 and small[1] <= small[2] * 1.0001):
        raise NumericalError("Mellin integral diverges at u = 0")
    head, _ = _quad(integrand, 0.0, u_split)
    total = head
    lo, hi = u_split, u_tail0
    last = None
    for _ in range(max_doublings):
        piece, _ = _quad(integrand, lo, hi)
        total += piece
        if last is not None and abs(piece) > abs(last) and abs(piece) > rtol * abs(total):
            raise NumericalError("Mellin integral diverges at u = infinity")
        if abs(piece) <= rtol * abs(total) or piece == 0.0:
            # exponential-fit tail beyond hi
            a, b = integrand(0.5 * hi), integrand(hi)
            if a != 0.0 and b != 0.0 and a * b > 0 and abs(b) < abs(a):
                k = math.log(a / b) / (0.5 * hi)
                total += b / k
            return total
        last = piece
        lo, hi = hi, 2.0 * hi
    raise NumericalError("Mellin integral diverges at u = infinity")


def fractional_asymptotics(f, p, mu, n_terms):
    """Coefficients c_n = p M[f; p(n+1)] (-1)^n / (n! Gamma(mu - n)).

    The generalised fractional integral then behaves as
    sum_n c_n lambda^(-p(n - mu + 1)) for large lambda.
    """
    coeffs = []
    for n in range(n_terms):
        r = rgamma(mu - n)
        if r == 0.0:
            coeffs.append(0.0)
            continue
        coeffs.append(p * mellin(f, p * (n + 1)) * (-1) ** n / math.factorial(n) * r)
    return coeffs


def _decays_exponentially(h, v_probe=(25.0, 100.0, 400.0, 1600.0)):
    # faster than any power: the local log-log slope must be steep at large v
    vals = [abs(float(h(v))) for v in v_probe]
    if vals[-1] == 0.0:
        return True
    if vals[-2] == 0.0:
        return False
    slope = math.log(vals[-1] / vals[-2]) / math.log(v_probe[-1] / v_probe[-2])
    return slope < -6.0


def asymptotic_coefficients(shear, omega=OMEGA_REF):
    """(M21, M22, M41) of I2 ~ M21 E^-5/2 + M22 E^-7/2, I4 ~ M41 E^-7/2."""
    if shear.is_zero:
        return MellinCoefficients(0.0, 0.0, 0.0, omega)

    def g(v):
        return float(v**1.5 * wkb.b_second_derivative(shear, omega, v))

    def h(v):
        return float(v**2.5 * wkb.g1_third_derivative(shear, omega, v))

    if not (_decays_exponentially(g) and _decays_exponentially(h)):
        raise NotApplicableError("the Abel densities do not decay exponentially; "
                                 "the E^-5/2, E^-7/2 expansion does not apply")
    c_g = fractional_asymptotics(g, 1.0, 0.5, 2)
    c_h = fractional_asymptotics(h, 1.0, 0.5, 1)
    pref2 = -omega * SQRT_PI / (12.0 * math.pi)
    pref4 = SQRT_PI / (4.0 * math.pi * omega * 120.0)
    return MellinCoefficients(pref2 * c_g[0], pref2 * c_g[1], pref4 * c_h[0], omega)


@functools.lru_cache(maxsize=16)
def family_ii_coefficients(xi, alpha=1.0):
    """Table coefficients for Family II at the reference frequency sqrt(2)."""
    return asymptotic_coefficients(family_ii_shear(xi, alpha), OMEGA_REF)


class AsymptoticLevel(NamedTuple):
    n: int
    energy: float
    valid: bool


def asymptotic_quantisation(xi, beta, omega, n, coefficients=None, min_scaled_energy=10.0):
    """Solve E + a E^-5/2 + b E^-7/2 = (n + 1/2) omega with the Mellin coefficients."""
    m = coefficients or family_ii_coefficients(float(xi))
    a = omega**5 / (4.0 * beta**3) * m.m21
    b = omega**5 / (4.0 * beta) * (omega**2 / (2.0 * beta**4) * m.m22 + m.m41)
    target = (n + 0.5) * omega

    def f(E):
        return E + a * E**-2.5 + b * E**-3.5 - target

    def fp(E):
        return 1.0 - 2.5 * a * E**-3.5 - 3.5 * b * E**-4.5

    try:
        E = optimize.newton(f, target, fprime=fp, tol=1e-14, maxiter=100)
    except RuntimeError as exc:
        raise SolverError(f"asymptotic quantisation failed for n={n}", level=n) from exc
    valid = (beta / omega) ** 2 * E >= min_scaled_energy
    if not valid:
        warnings.warn(f"(beta/omega)^2 E = {(beta / omega) ** 2 * E:.3g} is not large; "
                      "the asymptotic condition is outside its range", RuntimeWarning, stacklevel=2)
    return AsymptoticLevel(n, float(E), bool(valid))


def decay_exponent(f, E_range, n_points=25):
    """Least-squares slope of log|f| against log E over a log-spaced grid."""
    E = np.geomspace(E_range[0], E_range[1], n_points)
    vals = np.asarray(f(E), dtype=float)
    if np.any(vals == 0) or np.any(np.sign(vals) != np.sign(vals[0])):
        raise ValueError("f changes sign on the requested range")
    slope, _ = np.polyfit(np.log(E), np.log(np.abs(vals)), 1)
    return float(slope)
