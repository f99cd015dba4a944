import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isochron.errors import DomainError, EnergyRangeError, NotApplicableError, ParameterError
from isochron.potentials import (
    Custom,
    FamilyI,
    FamilyII,
    Harmonic,
    Isotonic,
    SplitHarmonic,
    Urabe,
    asymptotic_frequencies,
    build_potential,
    classical_period,
    eval_V,
    invert_family_II,
    scale,
    turning_points,
)
from isochron.shear import callable_shear, family_ii_shear

SPECS = [
    Harmonic(1.3),
    FamilyI(0.5, 1.0, 1.0),
    FamilyI(0.3, 2.0, 0.7),
    Isotonic(1.0, 1.0),
    FamilyII(2.0, 1.0, 1.0, 1.0),
    FamilyII(3.0, 1.0, 0.5, 1.0),
    FamilyII(1.0, 1.0, 1.0, 1.0),
    FamilyII(1.7, 2.5, 1.0, 1.0),
    Urabe(0.2, 1.0),
    SplitHarmonic(0.4, 1.0),
]


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_period_is_energy_independent(spec):
    p = build_potential(spec)
    for E in (0.05, 0.9, 1.9):
        T = classical_period(p, E)
        assert T == pytest.approx(2 * math.pi / p.omega, rel=1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_turning_point_spacing(spec):
    p = build_potential(spec)
    for E in (0.1, 1.0, 1.5):
        lo, hi = turning_points(p, E)
        assert hi - lo == pytest.approx(2 * math.sqrt(2 * E) / p.omega, rel=1e-12)
        np.testing.assert_allclose(p.V(np.array([lo, hi])), E, rtol=1e-10)


def test_isotonic_against_explicit_formula():
    omega = 1.4
    p = build_potential(Isotonic(1.0, omega))
    x = np.linspace(-0.95, 8.0, 40)
    X = 0.5 * (x + 1) - 0.5 / (x + 1)
    np.testing.assert_allclose(p.V(x), 0.5 * omega**2 * X**2, rtol=1e-12, atol=1e-300)
    assert p.domain == (pytest.approx(-1.0), math.inf)
    with pytest.raises(DomainError):
        p.V(-1.0)
    with pytest.raises(DomainError):
        p.V(np.array([0.0, -2.0]))


def test_harmonic_and_split_harmonic_formulae():
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(eval_V(build_potential(Harmonic(2.0)), x), 2.0 * x**2, rtol=1e-15)
    rho, omega = 0.5, 1.0
    p = build_potential(SplitHarmonic(rho, omega))
    w_right = omega * (1 + rho) / (2 * rho)
    w_left = rho * w_right
    expected = np.where(x >= 0, 0.5 * w_right**2 * x**2, 0.5 * w_left**2 * x**2)
    np.testing.assert_allclose(p.V(x), expected, rtol=1e-14)
    # mirrored ratio describes the reflected well
    q = build_potential(SplitHarmonic(1 / rho, omega))
    np.testing.assert_allclose(q.V(x), p.V(x), rtol=1e-14)


@pytest.mark.parametrize("xi, alpha", [(1.0, 1.0), (1.0, 3.0), (2.0, 1.0), (3.0, 1.0), (2.2, 1.6)])
def test_family_ii_closed_forms_match_root_solve(xi, alpha):
    p = build_potential(FamilyII(xi, alpha))
    lo, _ = p.domain
    x = np.linspace(max(lo + 0.05, -6.0), 6.0, 41)
    np.testing.assert_allclose(p.X_of_x(x), p.X_of_x_generic(x), rtol=1e-11, atol=1e-12)
    X = invert_family_II(xi, alpha, x)
    Y = np.exp(X)
    poly = Y ** (xi + 1) + 2 * (alpha - 1) * Y**xi + Y ** (xi - 1) - 2 * alpha * np.exp(xi * x)
    np.testing.assert_allclose(poly / (2 * alpha * np.exp(xi * x)), 0.0, atol=1e-11)


def test_family_i_closed_form_matches_root_solve():
    p = build_potential(FamilyI(0.37, 1.3, 1.0))
    x = np.linspace(-20, 20, 41)
    np.testing.assert_allclose(p.X_of_x(x), p.X_of_x_generic(x), rtol=1e-12, atol=1e-13)


def test_urabe_energy_ceiling():
    p = build_potential(Urabe(0.5, 1.0))
    assert p.e_max == pytest.approx(2.0)
    with pytest.raises(EnergyRangeError):
        turning_points(p, 2.5)
    with pytest.raises(ParameterError):
        turning_points(p, -1.0)


@pytest.mark.parametrize("spec", [FamilyI(0.0, 1.0), FamilyI(0.5, -1.0), Harmonic(0.0), FamilyII(0.5, 1.0)],
                         ids=repr)
def test_invalid_specs(spec):
    if isinstance(spec, FamilyI) and spec.alpha == 0.0:
        assert build_potential(spec).shear.is_zero
        return
    with pytest.raises(ParameterError):
        build_potential(spec)


@given(gamma=st.floats(0.2, 5.0), beta=st.floats(0.2, 5.0), x=st.floats(-3.0, 3.0))
@settings(max_examples=50, deadline=None)
def test_scale_transform(gamma, beta, x):
    p = build_potential(FamilyII(2.0, 1.0))
    q = scale(p, gamma, beta)
    assert q.omega == pytest.approx(gamma * p.omega)
    assert float(q.V(x)) == pytest.approx((gamma / beta) ** 2 * float(p.V(beta * x)), rel=1e-11, abs=1e-300)


def test_asymptotic_frequencies():
    xi = 3.0
    p = build_potential(FamilyII(xi, 1.0))
    af = asymptotic_frequencies(p)
    assert af.right == pytest.approx(1 / (1 + 1 / xi))
    assert af.left == pytest.approx(1 / (1 - 1 / xi))
    assert not af.singular and not af.approximate
    iso = asymptotic_frequencies(build_potential(Isotonic()))
    assert iso.singular and math.isinf(iso.left)
    with pytest.raises(NotApplicableError):
        asymptotic_frequencies(build_potential(Urabe(0.3)))


def test_custom_shear_potential():
    shear = callable_shear(family_ii_shear(2.0).eval)
    p = build_potential(Custom(shear, beta=1.0, gamma=1.0, omega=1.0))
    ref = build_potential(FamilyII(2.0, 1.0))
    x = np.linspace(-4, 4, 9)
    np.testing.assert_allclose(p.V(x), ref.V(x), rtol=1e-9, atol=1e-20)
    asym = asymptotic_frequencies(p)
    assert asym.approximate
    assert asym.right == pytest.approx(2 / 3, rel=1e-6)
    assert classical_period(p, 0.8) == pytest.approx(2 * math.pi, rel=1e-9)
