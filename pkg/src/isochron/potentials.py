"""Isochronous potentials built from shear functions.

A potential of frequency omega is V = omega^2 X^2 / 2 where X(x) inverts
x = X + xbar(X). Closed forms are used where the family has one; otherwise
the monotone map x(X) is inverted by a bracketed, safeguarded Newton solve.
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple, Optional

import numpy as np

from . import shear as shears
from .errors import DomainError, EnergyRangeError, NotApplicableError, NumericalError, ParameterError

# -- family specifications ----------------------------------------------------------


def _positive(name, value):
    if not value > 0:
        raise ParameterError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class Harmonic:
    omega: float = 1.0


@dataclass(frozen=True)
class FamilyI:
    alpha: float
    beta: float = 1.0
    omega: float = 1.0


@dataclass(frozen=True)
class FamilyII:
    xi: float
    alpha: float = 1.0
    beta: float = 1.0
    omega: float = 1.0


@dataclass(frozen=True)
class Isotonic:
    beta: float = 1.0
    omega: float = 1.0


@dataclass(frozen=True)
class Urabe:
    zeta: float
    omega: float = 1.0


@dataclass(frozen=True)
class SplitHarmonic:
    """rho = omega_left / omega_right; omega = 2 w_l w_r / (w_l + w_r)."""

    rho: float
    omega: float = 1.0


@dataclass(frozen=True)
class Custom:
    shear: shears.ShearFunction
    beta: float = 1.0
    gamma: float = 1.0
    omega: float = 1.0


FamilySpec = Harmonic | FamilyI | FamilyII | Isotonic | Urabe | SplitHarmonic | Custom


class AsymptoticFrequencies(NamedTuple):
    right: float
    left: float
    singular: bool
    approximate: bool


# -- closed-form X(x) maps, written for beta = 1 ------------------------------------


def _family_i_X(alpha):
    def X_of_y(y):
        # root of (1-a) X^2 - 2(y+1) X + y(y+2) = 0 with dx/dX > 0
        y = np.asarray(y, dtype=float)
        u = y + 1.0
        d = np.sqrt((1.0 - alpha) + alpha * u * u)
        with np.errstate(divide="ignore", invalid="ignore"):
            near = y * (y + 2.0) / (y + 1.0 + d)
            far = (y + 1.0 - d) / (1.0 - alpha) if alpha < 1.0 else near
        return np.where(y + 1.0 >= 0.0, near, far)

    return X_of_y


def _xi1_X(alpha):
    log_2a = math.log(2.0 * alpha)

    def X_of_y(y):
        # Y = 1 - a + r with r = sqrt(2a(e^y - 1) + a^2); rationalised, Y = (2a e^y - 1)/(r + a - 1)
        r = np.sqrt(2.0 * alpha * np.expm1(y) + alpha * alpha)
        return np.log(np.expm1(y + log_2a) / (r + alpha - 1.0))

    return X_of_y


def _xi1_alpha1_X(y):
    # X = ln(2 e^y - 1) / 2
    return 0.5 * np.log1p(2.0 * np.expm1(y))


def _xi2_alpha1_X(y):
    # X = (2/3) y + ln(q+^(1/3) - q-^(1/3)), q+- = sqrt(1 + e^(-4y)/27) +- 1
    y = np.asarray(y, dtype=float)
    r = np.exp(-4.0 * y) / 27.0
    s = np.sqrt(1.0 + r)
    qp = s + 1.0
    qm = r / (s + 1.0)  # s - 1 without cancellation
    a = np.cbrt(qp)
    b = np.cbrt(qm)
    # a - b = (a^3 - b^3)/(a^2 + ab + b^2) and a^3 - b^3 = 2
    return (2.0 / 3.0) * y + np.log(2.0 / (a * a + a * b + b * b))


def _xi3_alpha1_X(y):
    # Y^2 = (sqrt(1 + 8 e^{3y}) - 1)/2 = t / (2 (sqrt(1+t) + 1)), t = 8 e^{3y}
    y = np.asarray(y, dtype=float)
    log_t = math.log(8.0) + 3.0 * y
    log_1pt = np.logaddexp(0.0, log_t)
    log_den = math.log(2.0) + np.logaddexp(0.5 * log_1pt, 0.0)
    return 0.5 * (log_t - log_den)


def _urabe_X(zeta):
    def X_of_x(x):
        r = np.sqrt(1.0 + 2.0 * zeta * x)
        return 2.0 * x / (1.0 + r)

    return X_of_x


# -- the potential ---------------------------------------------------------------


@dataclass(frozen=True)
class IsochronousPotential:
    """Isochronous potential V(x) = omega^2 X(x)^2 / 2 of a shear S.

    ``shear`` already includes the spatial scale beta; ``beta`` and ``gamma``
    are kept as metadata of the transform V -> (gamma/beta)^2 V(beta x).
    """

    omega: float
    shear: shears.ShearFunction
    beta: float = 1.0
    gamma: float = 1.0
    family: str = "custom"
    params: dict = field(default_factory=dict)
    _X_of_scaled_x: Optional[object] = None  # closed-form X(y) at unit scale

    # domain ------------------------------------------------------------------
    @property
    def x_scale(self):
        """beta_s such that the closed form is written in y = beta_s x."""
        return self.shear.beta

    @property
    def domain(self):
        """(lower, upper) x-bounds; infinite ends are +-inf."""
        lo, hi = self.shear.validity
        if self.shear.singular_left:
            lo_x = self._singular_limit(-1)
        else:
            lo_x = float(self.shear.x_of_X(lo)) if math.isfinite(lo) else -math.inf
        if self.shear.singular_right:
            hi_x = self._singular_limit(+1)
        else:
            hi_x = float(self.shear.x_of_X(hi)) if math.isfinite(hi) else math.inf
        return lo_x, hi_x

    def _singular_limit(self, side):
        # x(X) -> x0 as X -> side*inf when 1 + side*S -> 0; extrapolate geometrically
        if self.shear.wall is not None:
            return self.shear.wall
        b = abs(self.shear.beta)
        vals = [float(self.shear.x_of_X(side * t / b)) for t in (200.0, 400.0, 800.0)]
        if abs(vals[2] - vals[1]) < 1e-13 * max(1.0, abs(vals[2])):
            return vals[2]
        d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
        return vals[2] - d2 * d2 / (d2 - d1) if d2 != d1 else vals[2]

    @property
    def e_max(self):
        """Largest energy for which both turning points lie inside the domain."""
        lo, hi = self.shear.validity
        m = min(abs(lo), abs(hi))
        return 0.5 * self.omega**2 * m * m if math.isfinite(m) else math.inf

    # evaluation ----------------------------------------------------------------
    def X_of_x(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.isfinite(lo):
            bad_lo = x < lo if not self.shear.singular_left else x <= lo
        else:
            bad_lo = np.zeros(x.shape, bool)
        if np.isfinite(hi):
            bad_hi = x > hi if not self.shear.singular_right else x >= hi
        else:
            bad_hi = np.zeros(x.shape, bool)
        if np.any(bad_lo):
            raise DomainError(f"x below the domain boundary {lo:g}", boundary=lo)
        if np.any(bad_hi):
            raise DomainError(f"x above the domain boundary {hi:g}", boundary=hi)
        if self._X_of_scaled_x is not None:
            b = self.x_scale
            return np.asarray(self._X_of_scaled_x(b * x), dtype=float) / b
        return invert_shear_map(self.shear, x)

    def X_of_x_generic(self, x):
        """Root-solve inversion, bypassing any closed form."""
        return invert_shear_map(self.shear, np.asarray(x, dtype=float))

    def V(self, x):
        X = self.X_of_x(x)
        return 0.5 * self.omega**2 * X * X

    __call__ = V

    def __hash__(self):
        return id(self)


def invert_shear_map(shear, x, tol=4e-16, max_iter=200):
    """Solve X + xbar(X) = x for X (vectorised bracketed Newton)."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    lo_v, hi_v = shear.validity
    lo = np.where(flat >= 0, 0.0, np.maximum(-np.maximum(1.0, -flat), lo_v))
    hi = np.where(flat >= 0, np.minimum(np.maximum(1.0, flat), hi_v), 0.0)
    # expand outward until bracketing (x(X) is increasing)
    for _ in range(1100):
        need_hi = (flat > 0) & (shear.x_of_X(hi) < flat)
        need_lo = (flat < 0) & (shear.x_of_X(lo) > flat)
        if not (need_hi.any() or need_lo.any()):
            break
        hi = np.where(need_hi, np.minimum(2.0 * hi, hi_v if math.isfinite(hi_v) else 2.0 * hi), hi)
        lo = np.where(need_lo, np.maximum(2.0 * lo, lo_v if math.isfinite(lo_v) else 2.0 * lo), lo)
    else:
        raise NumericalError("could not bracket the inverse of x(X)")
    X = np.clip(flat, lo, hi) * 0.5
    X = np.where((X <= lo) | (X >= hi), 0.5 * (lo + hi), X)
    for _ in range(max_iter):
        f = shear.x_of_X(X) - flat
        lo = np.where(f < 0, X, lo)
        hi = np.where(f > 0, X, hi)
        step = f / shear.one_plus(X)
        Xn = X - step
        outside = ~((Xn > lo) & (Xn < hi)) | ~np.isfinite(Xn)
        Xn = np.where(outside, 0.5 * (lo + hi), Xn)
        done = np.abs(Xn - X) <= tol * np.maximum(1.0, np.abs(X))
        X = Xn
        if done.all():
            break
    return X.reshape(x.shape)


# -- construction ------------------------------------------------------------------


def build_potential(spec):
    """Construct the IsochronousPotential described by a family spec."""
    if isinstance(spec, Harmonic):
        _positive("omega", spec.omega)
        return IsochronousPotential(spec.omega, shears.harmonic_shear(), family="harmonic",
                                    _X_of_scaled_x=lambda y: np.asarray(y, dtype=float))
    if isinstance(spec, Isotonic):
        _positive("beta", spec.beta)
        _positive("omega", spec.omega)
        return IsochronousPotential(spec.omega, shears.isotonic_shear().scaled(spec.beta), beta=spec.beta,
                                    family="isotonic", params={"beta": spec.beta},
                                    _X_of_scaled_x=_family_i_X(1.0))
    if isinstance(spec, FamilyI):
        _positive("beta", spec.beta)
        _positive("omega", spec.omega)
        sh = shears.family_i_shear(spec.alpha)
        closed = _family_i_X(spec.alpha) if spec.alpha > 0 else (lambda y: np.asarray(y, dtype=float))
        return IsochronousPotential(spec.omega, sh.scaled(spec.beta), beta=spec.beta, family="family_i",
                                    params={"alpha": spec.alpha, "beta": spec.beta},
                                    _X_of_scaled_x=closed)
    if isinstance(spec, FamilyII):
        _positive("beta", spec.beta)
        _positive("omega", spec.omega)
        sh = shears.family_ii_shear(spec.xi, spec.alpha)
        return IsochronousPotential(spec.omega, sh.scaled(spec.beta), beta=spec.beta, family="family_ii",
                                    params={"xi": spec.xi, "alpha": spec.alpha, "beta": spec.beta},
                                    _X_of_scaled_x=family_ii_closed_form(spec.xi, spec.alpha))
    if isinstance(spec, Urabe):
        _positive("omega", spec.omega)
        sh = shears.urabe_shear(spec.zeta)
        return IsochronousPotential(spec.omega, sh, family="urabe", params={"zeta": spec.zeta},
                                    _X_of_scaled_x=_urabe_X(spec.zeta))
    if isinstance(spec, SplitHarmonic):
        _positive("omega", spec.omega)
        rho = spec.rho
        if rho > 1.0:
            rho = 1.0 / rho  # mirror image
        sh = shears.split_harmonic_shear(rho)
        s = sh.s0_plus
        return IsochronousPotential(spec.omega, sh, family="split_harmonic", params={"rho": rho},
                                    _X_of_scaled_x=lambda y: np.where(np.asarray(y) >= 0,
                                                                      np.asarray(y) / (1.0 + s),
                                                                      np.asarray(y) / (1.0 - s)))
    if isinstance(spec, Custom):
        _positive("omega", spec.omega)
        _positive("beta", spec.beta)
        _positive("gamma", spec.gamma)
        return IsochronousPotential(spec.gamma * spec.omega, spec.shear.scaled(spec.beta), beta=spec.beta,
                                    gamma=spec.gamma, family=spec.shear.name, params=dict(spec.shear.params))
    raise ParameterError(f"unknown family spec {spec!r}")


def family_ii_closed_form(xi, alpha):
    """Closed-form X(x) at unit scale when the family has one, else None."""
    if xi == 1.0:
        return _xi1_alpha1_X if alpha == 1.0 else _xi1_X(alpha)
    if alpha == 1.0 and xi == 2.0:
        return _xi2_alpha1_X
    if alpha == 1.0 and xi == 3.0:
        return _xi3_alpha1_X
    return None


def eval_V(p, x):
    """V(x); raises DomainError outside the domain."""
    return p.V(x)


def invert_family_II(xi, alpha, x):
    """X solving Y^(xi+1) + 2(alpha-1) Y^xi + Y^(xi-1) - 2 alpha e^(xi x) = 0, Y = e^X."""
    shears.check_family_ii(xi, alpha)
    p = build_potential(FamilyII(xi, alpha))
    return p.X_of_x(x)


def turning_points(p, E):
    """(x_-, x_+) with V(x_+-) = E."""
    if not E > 0:
        raise ParameterError("energy must be positive")
    if E >= p.e_max:
        raise EnergyRangeError(f"E={E:g} exceeds the potential range {p.e_max:g}", e_max=p.e_max)
    Xt = math.sqrt(2.0 * E) / p.omega
    return float(p.shear.x_of_X(-Xt)), float(p.shear.x_of_X(Xt))


def _gap_to_turning_point(shear, Xt_signed, delta, gap):
    # refine gap = |Xt - X| from delta = |x_t - x| via delta = int (1 + S) dX over the gap;
    # avoids the cancellation in Xt - |X(x)| close to the turning point
    t, w = np.polynomial.legendre.leggauss(4)
    sgn = math.copysign(1.0, Xt_signed)
    for _ in range(3):
        nodes = Xt_signed - sgn * 0.5 * gap[:, None] * (t[None, :] + 1.0)
        mean = 0.5 * (shear.one_plus(nodes) * w).sum(axis=1)
        gap = delta / mean
    return gap


def _half_period(p, E, x_turn, Xt, rtol):
    # int_0^{x_t} dx / sqrt(2(E - V)), x = x_t sin(theta) puts the root singularity
    # at theta = pi/2 into a smooth integrand
    prev = None
    sgn = math.copysign(1.0, x_turn)
    for n in (16, 32, 64, 128, 256, 512, 1024, 2048):
        t, w = np.polynomial.legendre.leggauss(n)
        theta = 0.25 * math.pi * (t + 1.0)
        x = x_turn * np.sin(theta)
        X = np.abs(p.X_of_x(x))
        gap = Xt - X
        near = gap < 1e-2 * Xt
        if near.any():
            delta = abs(x_turn) * 2.0 * np.sin(0.25 * math.pi - 0.5 * theta[near]) ** 2
            gap[near] = _gap_to_turning_point(p.shear, sgn * Xt, delta, gap[near])
        # 2(E - V) = omega^2 (Xt - |X|)(Xt + |X|)
        f = abs(x_turn) * np.cos(theta) / (p.omega * np.sqrt(gap * (Xt + X)))
        val = 0.25 * math.pi * np.dot(w, f)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val, abs(val - prev)
        prev = val
    raise NumericalError("period quadrature did not converge", error_estimate=abs(val - prev))


def classical_period(p, E, rtol=1e-12):
    """T(E) = 2 int dx / sqrt(2(E - V)) by x-space quadrature."""
    xm, xp = turning_points(p, E)
    Xt = math.sqrt(2.0 * E) / p.omega
    right, _ = _half_period(p, E, xp, Xt, rtol)
    left, _ = _half_period(p, E, xm, Xt, rtol)
    return 2.0 * (left + right)


def scale(p, gamma, beta):
    """V -> (gamma/beta)^2 V(beta x): frequency gamma*omega, shear S(beta X)."""
    if gamma == 0 or beta == 0:
        raise ParameterError("scaling parameters must be non-zero")
    gamma, beta = abs(gamma), float(beta)
    return IsochronousPotential(p.omega * gamma, p.shear.scaled(beta), beta=p.beta * beta,
                                gamma=p.gamma * gamma, family=p.family, params=p.params,
                                _X_of_scaled_x=p._X_of_scaled_x if beta > 0 else None)


def asymptotic_frequencies(p):
    """(omega_+, omega_-) = omega / (1 +- <S>) of the large-|x| parabolic branches."""
    lo, hi = p.shear.validity
    if math.isfinite(lo) or math.isfinite(hi):
        raise NotApplicableError("asymptotic frequencies need a shear defined on the whole line")
    m = p.shear.s_mean
    approx = not p.shear.mean_is_exact
    right = p.omega / (1.0 + m) if m > -1.0 else math.inf
    left = p.omega / (1.0 - m) if m < 1.0 else math.inf
    singular = abs(abs(m) - 1.0) < 1e-12
    return AsymptoticFrequencies(right, left, singular, approx)
