import math

import numpy as np
import pytest
import sympy as sp
from scipy import special as sps

from isochron.errors import NotApplicableError, SingularIntegrandError
from isochron.potentials import FamilyI, FamilyII, Harmonic, Isotonic, SplitHarmonic, Urabe, build_potential, scale
from isochron.shear import algebraic_i2_shear, family_i_shear, family_ii_shear, isotonic_shear, urabe_shear
from isochron.wkb import (
    action_I0,
    epsilon_wkb,
    family_I_analytic,
    i2_bessel_singular,
    i2_quadrature,
    i4_quadrature,
    maslov_isotonic,
    quantise,
    quartic_p,
    wkb_scale_term,
    wkb_terms,
)

ENERGIES = np.array([0.1, 1.0, 10.0, 100.0])


@pytest.mark.parametrize("route", ["u", "v"])
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_family_i_quadrature_matches_closed_form(route, alpha):
    omega = 1.3
    shear = family_i_shear(alpha)
    i2, i4, _, _ = family_I_analytic(alpha, 1.0, omega, ENERGIES)
    np.testing.assert_allclose(i2_quadrature(shear, omega, ENERGIES, route=route), i2, rtol=1e-9)
    np.testing.assert_allclose(i4_quadrature(shear, omega, ENERGIES, route=route), i4, rtol=1e-8)


def test_quartic_reduces_to_constant_for_isotonic():
    assert quartic_p(0.0, np.array([0.0, 3.0, 50.0])) == pytest.approx(8.0)


@pytest.mark.parametrize("beta, omega", [(1.0, 1.0), (0.3, 1.0), (2.0, 0.7)])
def test_isotonic_terms_are_constant(beta, omega):
    shear = isotonic_shear().scaled(beta)
    E = np.array([0.2, 2.0, 30.0])
    np.testing.assert_allclose(i2_quadrature(shear, omega, E), -beta**2 / (8 * omega), rtol=1e-11)
    np.testing.assert_allclose(i4_quadrature(shear, omega, E), beta**6 / (32 * omega**3), rtol=1e-10)


def test_maslov_index():
    assert maslov_isotonic(1.0, 1.0) == pytest.approx(1 + math.sqrt(2), rel=1e-15)
    # small beta: mu -> 2 + beta^2 / (2 omega)
    beta, omega = 1e-2, 1.0
    assert maslov_isotonic(beta, omega) == pytest.approx(2 + beta**2 / (2 * omega), rel=1e-12)


def test_bessel_closed_form_for_logarithmic_well():
    omega = math.sqrt(2.0)
    shear = family_ii_shear(1.0, 1.0)
    E = np.array([0.1, 0.5, 2.0, 10.0])
    z = 2 * np.sqrt(E)
    oracle = -(math.sqrt(2) / 24) * (sps.i0(z) + sps.i1(z) / z)
    np.testing.assert_allclose(i2_bessel_singular(1.0, E), oracle, rtol=1e-13)
    np.testing.assert_allclose(i2_quadrature(shear, omega, E), oracle, rtol=1e-9)


@pytest.mark.parametrize("omega", [1.0, 1.7])
def test_algebraic_i2_shear_round_trip(omega):
    E = np.array([0.1, 1.0, 10.0, 100.0])
    expected = -(omega**8) / 6 / (omega**2 + 2 * E) ** 4.5
    np.testing.assert_allclose(i2_quadrature(algebraic_i2_shear(), omega, E), expected, rtol=1e-10)


@pytest.mark.parametrize("k, func", [(1, i2_quadrature), (2, i4_quadrature)])
def test_scaling_law(k, func):
    rng = np.random.default_rng(11)
    p = build_potential(FamilyII(2.0, 1.0))
    for _ in range(4):
        gamma, beta, E = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.2, 20.0)
        q = scale(p, gamma, beta)
        direct = func(q.shear, q.omega, E)
        via_law = wkb_scale_term(lambda e: func(p.shear, p.omega, e), k, gamma, beta)(E)
        assert float(direct) == pytest.approx(float(via_law), rel=1e-9)


def test_epsilon_matches_family_i_formula():
    beta = 0.5
    p = build_potential(FamilyI(0.5, beta, 1.0))
    E = np.array([0.7, 5.0, 40.0])
    t = beta**2 * E
    Q = 1 + t / 2
    P = quartic_p(0.5, t)
    oracle = beta**2 / (32 * Q**2.5) - beta**6 * P / (2**12 * Q**7.5)
    np.testing.assert_allclose(epsilon_wkb(p, E), oracle, rtol=1e-9)


def test_wkb_terms_and_action():
    p = build_potential(FamilyI(0.5, 1.0, 1.0))
    analytic = wkb_terms(p, 2.0)
    assert analytic.method == "analytic"
    generic = build_potential(FamilyII(3.0, 1.0))
    quad = wkb_terms(generic, 2.0)
    assert quad.method == "quadrature" and quad.i0 == pytest.approx(2.0)
    assert quad.error_estimate < 1e-10
    for spec in (FamilyII(3.0, 1.0), Isotonic(1.0, 1.3)):
        pot = build_potential(spec)
        assert action_I0(pot, 1.7) == pytest.approx(1.7 / pot.omega, rel=1e-11)


def test_quantise_orders():
    harmonic = build_potential(Harmonic(2.0))
    levels = quantise(harmonic, 3)
    assert [r.energy for r in levels] == pytest.approx([1.0, 3.0, 5.0, 7.0])
    p = build_potential(Isotonic(1.0, 1.0))
    ebk = quantise(p, 2, order="EBK")
    assert [r.energy for r in ebk] == pytest.approx([0.5, 1.5, 2.5])
    fourth = quantise(p, 2)
    for r in fourth:
        assert r.energy == pytest.approx(r.n + 0.5 + 1 / 8 - 1 / 32, rel=1e-12)
    picked = quantise(p, 0, levels=[5])
    assert picked[0].n == 5
    with pytest.raises(ValueError):
        quantise(p, 2, order="sixth")


def test_isotonic_small_beta_expansion():
    betas = np.linspace(0.05, 0.2, 5)
    shifts = np.array([quantise(build_potential(Isotonic(b, 1.0)), 0, levels=[2])[0].energy - 2.5 for b in betas])
    design = np.vstack([betas**2, betas**6]).T
    coef, *_ = np.linalg.lstsq(design, shifts, rcond=None)
    assert coef[0] == pytest.approx(1 / 8, rel=1e-6)
    assert coef[1] == pytest.approx(-1 / 32, rel=1e-4)


def test_non_smooth_and_out_of_range():
    with pytest.raises(NotApplicableError):
        epsilon_wkb(build_potential(SplitHarmonic(0.5)), 1.0)
    with pytest.raises(SingularIntegrandError):
        i2_quadrature(urabe_shear(0.5), 1.0, 5.0)
    with pytest.raises(ValueError):
        i2_quadrature(isotonic_shear(), 1.0, -1.0)
    with pytest.raises(ValueError):
        i2_quadrature(isotonic_shear(), 1.0, 1.0, route="w")


def test_urabe_inside_range():
    # finite but well-defined below the ceiling
    p = build_potential(Urabe(0.2, 1.0))
    assert np.isfinite(epsilon_wkb(p, 1.0))


def test_zero_energy_limit_matches_perturbation_theory():
    # for V = w^2 x^2/2 + a x^3 + b x^4 the energy-independent level shift gives
    # I2(0) = -3b/(8 w^3) + 7a^2/(16 w^5)
    x = sp.symbols("x")
    V = sp.Rational(1, 4) * sp.log(2 * sp.exp(x) - 1) ** 2
    series = sp.series(V, x, 0, 5).removeO()
    omega = math.sqrt(2 * float(series.coeff(x, 2)))
    a, b = float(series.coeff(x, 3)), float(series.coeff(x, 4))
    oracle = -3 * b / (8 * omega**3) + 7 * a**2 / (16 * omega**5)
    assert omega == pytest.approx(math.sqrt(2))
    assert float(i2_quadrature(family_ii_shear(1.0, 1.0), omega, 1e-8)) == pytest.approx(oracle, rel=1e-6)
    assert float(i2_bessel_singular(1.0, 1e-8)) == pytest.approx(oracle, rel=1e-6)
