"""Truncated WKB series I0 + I2 + I4 for isochronous potentials (hbar = 1).

Two independent routes are provided for each correction:

* ``"u"``: the E-derivatives of the u-integrals are moved under the integral.
  Since X = sqrt(2Eu)/omega, E d/dE acts on F(X) as D/2 with D = X d/dX,
  so d^k/dE^k = E^-k prod_{j<k}(D/2 - j).
* ``"v"``: the Abel-type v-integrals, with v-derivatives of functions of
  sqrt(2v)/omega obtained by composing Taylor jets.

Integrals over u in (0, 1) with weights u^a (1-u)^(-1/2) become smooth
periodic integrals after u = sin^2(theta); the trapezoidal rule in theta is
then spectrally accurate and nests under doubling.
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import polynomial as poly
from scipy import optimize

from .errors import NotApplicableError, NumericalError, SingularIntegrandError, SolverError
from .jets import Jet, euler_operator, sqrt_variable_jet
from .potentials import IsochronousPotential
from .special import bessel_i0, bessel_i1

# P(D) = prod_{j<k} (D/2 - j) in increasing powers of D
_P2 = poly.polyfromroots([0.0, 2.0]) / 4.0
_P3 = poly.polyfromroots([0.0, 2.0, 4.0]) / 8.0
_P4 = poly.polyfromroots([0.0, 2.0, 4.0, 6.0]) / 16.0


@dataclass(frozen=True)
class WkbTerms:
    energy: float
    i0: float
    i2: float
    i4: float
    method: str
    error_estimate: float


@dataclass(frozen=True)
class QuantisationResult:
    n: int
    energy: float
    order: str
    residual: float


# -- quadrature ----------------------------------------------------------------------


def _theta_quadrature(integrand, E, power, rtol=1e-12, atol=1e-300, n0=32, n_max=2**18):
    """int_0^1 u^power (1-u)^(-1/2) f(u; E) du for each E.

    ``integrand(u, E)`` receives u of shape (m, 1) and E of shape (1, nE) and
    returns f of shape (m, nE). Uses u = sin^2 theta and the nested
    trapezoidal rule in theta on [0, pi/2].
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    skip_origin = power > -0.5

    def weighted(theta, Es):
        s = np.sin(theta)[:, None]
        u = s * s
        vals = integrand(u, Es[None, :])
        return 2.0 * s ** (2.0 * power + 1.0) * vals

    h = 0.5 * math.pi / n0
    theta = np.arange(n0 + 1) * h
    ends = np.ones(n0 + 1)
    ends[0] = ends[-1] = 0.5
    if skip_origin:
        theta_eval, w = theta[1:], ends[1:]
    else:
        theta_eval, w = theta, ends
    first = w[:, None] * weighted(theta_eval, E)
    total = first.sum(axis=0)
    # integral of |f| bounds the attainable accuracy when the integrand cancels
    total_abs = np.abs(first).sum(axis=0)
    est = h * total
    result = np.zeros(E.shape)
    result_err = np.full(E.shape, np.inf)
    active = np.ones(E.shape, bool)
    prev_err = np.full(E.shape, np.inf)
    n = n0
    while n < n_max:
        n *= 2
        h *= 0.5
        mids = (2 * np.arange(n // 2) + 1) * h
        idx = np.flatnonzero(active)
        block = weighted(mids, E[idx])
        total[idx] += block.sum(axis=0)
        total_abs[idx] += np.abs(block).sum(axis=0)
        new = h * total[idx]
        err = np.abs(new - est[idx])
        est[idx] = new
        floor = 64.0 * np.finfo(float).eps * h * total_abs[idx]
        conv = err <= np.maximum(np.maximum(rtol * np.abs(new), floor), atol)
        # a spectrally convergent rule that stops improving has hit the rounding
        # noise of an integrand that cancels internally; accept at that level
        plateau = (n >= 2048) & (err >= 0.5 * prev_err[idx]) & (err <= 1e-6 * total_abs[idx] * h)
        result[idx[plateau]] = new[plateau]
        result_err[idx[plateau]] = np.maximum(err[plateau], prev_err[idx][plateau])
        prev_err[idx] = err
        conv_only = conv & ~plateau
        result[idx[conv_only]] = new[conv_only]
        result_err[idx[conv_only]] = np.maximum(err[conv_only], floor[conv_only])
        conv = conv | plateau
        result_err[idx[~conv]] = err[~conv]
        active[idx[conv]] = False
        if not active.any():
            return result, result_err
    raise NumericalError("quadrature did not converge before the node limit",
                         error_estimate=float(result_err[active].max()))


def _check_admissible(shear, Xt):
    lo, hi = shear.validity
    if np.any(Xt >= hi) or np.any(-Xt <= lo):
        raise SingularIntegrandError("|S| reaches 1 inside the integration range (energy beyond the shear's validity)")


def _require_analytic(shear):
    if not shear.analytic:
        raise NotApplicableError(f"WKB corrections need a smooth shear; {shear.name} is not differentiable at 0")


def _complement_product(S_jet):
    one_minus_s2 = 1.0 - S_jet * S_jet
    if np.any(one_minus_s2.value <= 0.0):
        raise SingularIntegrandError("|S| >= 1 at a quadrature node")
    return one_minus_s2


def _g_functions(shear, X, omega, order):
    """Jets (order ``order``) of G1 and G2 about X."""
    S_full = shear.jet(X, order + 1)
    Sp = S_full.deriv()
    S = Jet(S_full.c[: order + 1])
    Xj = Jet.variable(X, order)
    s2 = S * S
    oms = _complement_product(S)
    inv = oms.reciprocal()
    inv3 = inv * inv * inv
    xssp = Xj * S * Sp
    g1 = omega**4 * inv3 * (3.0 * s2 + 1.0 + 8.0 * xssp * (1.0 + s2) * inv
                            + Xj * Xj * Sp * Sp * (1.0 + 10.0 * s2 + 5.0 * s2 * s2) * inv * inv)
    g2 = omega**6 * Xj * Xj * inv3 * (3.0 * s2 + 1.0 + 4.0 * xssp * (1.0 + s2) * inv)
    return g1, g2


def _f_jet(shear, X, order):
    S = shear.jet(X, order)
    return _complement_product(S).reciprocal()


def b_second_derivative(shear, omega, v):
    """d^2/dv^2 [v / (1 - S^2(sqrt(2v)/omega))]."""
    v = np.asarray(v, dtype=float)
    scale = math.sqrt(2.0) / omega
    X = scale * np.sqrt(v)
    b = _f_jet(shear, X, 2).compose_into(sqrt_variable_jet(v, scale, 2)) * Jet.variable(v, 2)
    return 2.0 * b.c[2]


def g1_third_derivative(shear, omega, v):
    """d^3/dv^3 G1(sqrt(2v)/omega)."""
    v = np.asarray(v, dtype=float)
    scale = math.sqrt(2.0) / omega
    g1, _ = _g_functions(shear, scale * np.sqrt(v), omega, 3)
    return 6.0 * g1.compose_into(sqrt_variable_jet(v, scale, 3)).c[3]


def g2_fourth_derivative(shear, omega, v):
    """d^4/dv^4 G2(sqrt(2v)/omega)."""
    v = np.asarray(v, dtype=float)
    scale = math.sqrt(2.0) / omega
    _, g2 = _g_functions(shear, scale * np.sqrt(v), omega, 4)
    return 24.0 * g2.compose_into(sqrt_variable_jet(v, scale, 4)).c[4]


# -- I2, I4 -----------------------------------------------------------------------


def i2_quadrature(shear, omega, E, route="u", rtol=1e-12, return_error=False):
    """Second-order WKB term I2(E) of the potential generated by ``shear``."""
    _require_analytic(shear)
    E = np.asarray(E, dtype=float)
    Es = np.atleast_1d(E)
    if np.any(Es <= 0):
        raise ValueError("energies must be positive")
    _check_admissible(shear, np.sqrt(2.0 * Es) / omega)
    if shear.expr is None:
        val, err = _i2_energy_difference(shear, omega, Es, rtol)
    elif route == "u":
        def integrand(u, Ev):
            X = np.sqrt(2.0 * Ev * u) / omega
            return euler_operator([0.0, 2.0, 1.0], _f_jet(shear, X, 2), X)

        q, err = _theta_quadrature(integrand, Es, 0.5, rtol=rtol)
        val = -omega / (48.0 * math.pi * Es) * q
        err = omega / (48.0 * math.pi * Es) * err
    elif route == "v":
        def integrand(u, Ev):
            return b_second_derivative(shear, omega, Ev * u)

        q, err = _theta_quadrature(integrand, Es, 1.5, rtol=rtol)
        val = -omega / (12.0 * math.pi) * q
        err = omega / (12.0 * math.pi) * err
    else:
        raise ValueError("route must be 'u' or 'v'")
    val = val.reshape(E.shape)
    return (val, err.reshape(E.shape)) if return_error else val


def i4_quadrature(shear, omega, E, route="u", rtol=1e-12, return_error=False):
    """Fourth-order WKB term I4(E) of the potential generated by ``shear``."""
    _require_analytic(shear)
    E = np.asarray(E, dtype=float)
    Es = np.atleast_1d(E)
    if np.any(Es <= 0):
        raise ValueError("energies must be positive")
    _check_admissible(shear, np.sqrt(2.0 * Es) / omega)
    pref = 1.0 / (4.0 * math.pi * omega)
    if shear.expr is None:
        val, err = _i4_energy_difference(shear, omega, Es, rtol)
    elif route == "u":
        def integrand(u, Ev):
            X = np.sqrt(2.0 * Ev * u) / omega
            g1, g2 = _g_functions(shear, X, omega, 4)
            return (euler_operator(_P3, g1, X) / (120.0 * Ev**3)
                    - euler_operator(_P4, g2, X) / (288.0 * Ev**4))

        q, err = _theta_quadrature(integrand, Es, -0.5, rtol=rtol)
        val, err = pref * q, pref * err
    elif route == "v":
        def integrand_1(u, Ev):
            return g1_third_derivative(shear, omega, Ev * u)

        def integrand_2(u, Ev):
            return g2_fourth_derivative(shear, omega, Ev * u)

        q1, e1 = _theta_quadrature(integrand_1, Es, 2.5, rtol=rtol)
        q2, e2 = _theta_quadrature(integrand_2, Es, 3.5, rtol=rtol)
        val = pref * (q1 / 120.0 - q2 / 288.0)
        err = pref * (e1 / 120.0 + e2 / 288.0)
    else:
        raise ValueError("route must be 'u' or 'v'")
    val = val.reshape(E.shape)
    return (val, err.reshape(E.shape)) if return_error else val


def _richardson_derivative(func, E, k, rel_step=1e-3, levels=3):
    # central differences of order k with step halving and Richardson extrapolation
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
        3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
        4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0]),
    }
    offs, wts = stencils[k]
    h0 = rel_step * E
    table = []
    for lev in range(levels):
        h = h0 / 2**lev
        acc = sum(w * func(E + o * h) for o, w in zip(offs, wts))
        table.append(acc / h**k)
    # second-order stencils: error series in h^2
    for m in range(1, levels):
        f = 4.0**m
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    return table[0], np.abs(table[0]) * 1e-6


def _i2_energy_difference(shear, omega, E, rtol):
    # fallback for shears without exact derivatives
    def h(Ev):
        def integrand(u, Eq):
            X = np.sqrt(2.0 * Eq * u) / omega
            return 1.0 / (1.0 - shear.eval(X) ** 2)

        q, _ = _theta_quadrature(integrand, Ev, 0.5, rtol=rtol * 1e-2)
        return Ev * q

    d2, err = _richardson_derivative(h, E, 2)
    return -omega / (12.0 * math.pi) * d2, omega / (12.0 * math.pi) * err


def _i4_energy_difference(shear, omega, E, rtol):
    def moment(which):
        def h(Ev):
            def integrand(u, Eq):
                X = np.sqrt(2.0 * Eq * u) / omega
                S = shear.eval(X)
                Sp = shear.deriv(1, X)
                oms = 1.0 - S * S
                if which == 1:
                    return omega**4 / oms**3 * (3 * S * S + 1 + 8 * X * S * Sp * (1 + S * S) / oms
                                                + X * X * Sp * Sp * (1 + 10 * S * S + 5 * S**4) / oms**2)
                return omega**6 * X * X / oms**3 * (3 * S * S + 1 + 4 * X * S * Sp * (1 + S * S) / oms)

            q, _ = _theta_quadrature(integrand, Ev, -0.5, rtol=rtol * 1e-2)
            return q

        return h

    d3, e3 = _richardson_derivative(moment(1), E, 3)
    d4, e4 = _richardson_derivative(moment(2), E, 4)
    pref = 1.0 / (4.0 * math.pi * omega)
    return pref * (d3 / 120.0 - d4 / 288.0), pref * (e3 / 120.0 + e4 / 288.0)


# -- closed forms --------------------------------------------------------------------


def quartic_p(eta, E):
    """The quartic p(eta, E) of the Family I fourth-order term."""
    return (15 * eta**4 * E**4 - 30 * eta**3 * (7 * eta - 16) * E**3
            - 3 * eta**2 * (119 * eta**2 - 651 * eta + 411) * E**2
            + 3 * eta * (455 * eta**2 - 567 * eta + 104) * E
            - 280 * eta**2 + 140 * eta + 8)


def family_I_analytic(alpha, beta, omega, E):
    """Closed-form (I2, I4, Q, P) for Family I.

    I2 and I4 are the action terms (hbar = 1); the energy-level corrections
    are omega*I2 = -(alpha beta)^2 / (8 Q^(5/2)) and
    omega*I4 = alpha^4 beta^6 P / (2^8 omega^2 Q^(15/2)).
    """
    E = np.asarray(E, dtype=float)
    t = (beta / omega) ** 2 * E
    Q = 1.0 + 2.0 * alpha * (1.0 - alpha) * t
    P = quartic_p(1.0 - alpha, 2.0 * alpha * t)
    i2 = -((alpha * beta) ** 2) / (8.0 * omega * Q**2.5)
    i4 = alpha**4 * beta**6 * P / (256.0 * omega**3 * Q**7.5)
    return i2, i4, Q, P


def maslov_isotonic(beta, omega):
    """Exact Maslov index of the isotonic oscillator; levels are (n + mu/4) omega."""
    t = beta**4 / omega**2
    sqrt_minus_one = t / (math.sqrt(1.0 + t) + 1.0)
    return 3.0 + (omega / beta**2) * (sqrt_minus_one - beta**2 / omega)


def i2_bessel_singular(beta, E):
    """Closed-form I2 of the ln^2(2e^x - 1) potential at omega = sqrt(2).

    I2(E) = -(sqrt(2)/24) [I0(2 sqrt E) + I1(2 sqrt E) / (2 sqrt E)] for beta = 1;
    other beta follow from the WKB scaling law at fixed frequency.
    """
    E = np.asarray(E, dtype=float)
    Es = beta**2 * E
    z = 2.0 * np.sqrt(Es)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(z > 0, bessel_i1(z) / np.where(z > 0, z, 1.0), 0.5)
    return beta**2 * (-(math.sqrt(2.0) / 24.0) * (bessel_i0(z) + ratio))


# -- scaling, actions, quantisation -------------------------------------------------


def wkb_scale_term(term, k, gamma, beta):
    """E -> (beta^2/gamma)^(2k-1) term(beta^2 E / gamma^2) for V -> (gamma/beta)^2 V(beta x)."""
    factor = (beta**2 / gamma) ** (2 * k - 1)

    def scaled(E):
        return factor * term(beta**2 * np.asarray(E, dtype=float) / gamma**2)

    return scaled


def action_I0(p, E, rtol=1e-12):
    """I0(E) = (1/pi) int sqrt(2(E - V)) dx by x-space quadrature."""
    from .potentials import turning_points

    xm, xp = turning_points(p, E)
    Xt = math.sqrt(2.0 * E) / p.omega
    total = 0.0
    for x_turn in (xm, xp):
        prev = None
        for n in (16, 32, 64, 128, 256, 512, 1024):
            t, w = np.polynomial.legendre.leggauss(n)
            theta = 0.25 * math.pi * (t + 1.0)
            X = np.abs(p.X_of_x(x_turn * np.sin(theta)))
            f = abs(x_turn) * np.cos(theta) * p.omega * np.sqrt(np.maximum((Xt - X) * (Xt + X), 0.0))
            val = 0.25 * math.pi * np.dot(w, f)
            if prev is not None and abs(val - prev) <= rtol * abs(val):
                break
            prev = val
        else:
            raise NumericalError("action quadrature did not converge", error_estimate=abs(val - prev))
        total += val
    return total / math.pi


def wkb_terms(p: IsochronousPotential, E, route="u"):
    """(I0, I2, I4) at energy E; I0 uses the isochronous identity E/omega."""
    if p.family == "family_i" and p._X_of_scaled_x is not None and p.gamma == 1.0:
        alpha = p.params["alpha"]
        i2, i4, _, _ = family_I_analytic(alpha, p.shear.beta, p.omega, E)
        return WkbTerms(E, E / p.omega, float(i2), float(i4), "analytic", 0.0)
    if p.shear.is_zero:
        return WkbTerms(E, E / p.omega, 0.0, 0.0, "analytic", 0.0)
    i2, e2 = i2_quadrature(p.shear, p.omega, E, route=route, return_error=True)
    i4, e4 = i4_quadrature(p.shear, p.omega, E, route=route, return_error=True)
    return WkbTerms(E, E / p.omega, float(i2), float(i4), "quadrature", float(e2 + e4))


def epsilon_wkb(p, E, route="u"):
    """Fourth-order WKB shift of the level at energy E: -omega (I2 + I4)."""
    E = np.asarray(E, dtype=float)
    if p.shear.is_zero:
        return np.zeros_like(E)
    i2 = i2_quadrature(p.shear, p.omega, E, route=route)
    i4 = i4_quadrature(p.shear, p.omega, E, route=route)
    return -p.omega * (i2 + i4)


def quantise(p, n_max, order="fourth", route="u", levels=None):
    """Solve I0 + [I2 + I4] = n + 1/2 for n = 0..n_max (or the given ``levels``)."""
    if order not in ("EBK", "fourth"):
        raise ValueError("order must be 'EBK' or 'fourth'")
    omega = p.omega
    results = []
    levels = range(n_max + 1) if levels is None else [int(n) for n in levels]
    if order == "EBK" or p.shear.is_zero:
        for n in levels:
            results.append(QuantisationResult(n, (n + 0.5) * omega, order, 0.0))
        return results

    def corrections(E):
        i2 = i2_quadrature(p.shear, omega, E, route=route)
        i4 = i4_quadrature(p.shear, omega, E, route=route)
        return i2 + i4

    for n in levels:
        target = n + 0.5

        def f(E):
            return E / omega + float(corrections(E)) - target

        lo, hi = 0.5 * target * omega, 1.5 * target * omega
        try:
            flo, fhi = f(lo), f(hi)
        except (SingularIntegrandError, NumericalError) as exc:
            raise SolverError(f"WKB terms not available in the bracket for n={n}: {exc}", level=n) from exc
        if flo * fhi > 0:
            raise SolverError(f"quantisation root for n={n} is not bracketed by [0.5, 1.5](n+1/2)omega; "
                              "the corrections are too large for the truncated series", level=n)
        root = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        results.append(QuantisationResult(n, root, order, abs(f(root))))
    return results
