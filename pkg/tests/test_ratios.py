import math

import numpy as np
import pytest
from scipy import integrate, special

from arith import DiscriminantFamily, FamilyKind, FamilySpec, enumerate_family
from config import Config
from errors import AssemblyError, DomainError
from harness import fit_decay
from ratios import (EFactor, RatiosBreakdown, RatiosIntegrand, conductor_term, e_factor, e_factor_consistency,
                    r_secondary_model, r_term, ratios_prediction, zeta_ad_r_term)
from specfun import ZETA2, EulerProductSpec, a_d_prime, secondary_constant, zeta_log_deriv_reg, zeta_reg
from testfn import make_fejer, usp_density_functional

ZETA4 = math.pi ** 4 / 90
EULER = EulerProductSpec(prime_limit=10 ** 4)


@pytest.fixture(scope='module')
def single():
    return DiscriminantFamily.from_members([5])


@pytest.fixture(scope='module')
def integrand(family_1e4, small_spec):
    return RatiosIntegrand(family_1e4, small_spec, euler=EULER)


def test_e_factor_at_zero_and_symmetry(family_1e4):
    assert e_factor(family_1e4, 0.0) == pytest.approx(1.0, abs=1e-12)
    tau = np.linspace(0.1, 30, 60)
    E = EFactor(family_1e4)
    assert np.allclose(E(-tau), np.conj(E(tau)), atol=1e-12)
    assert np.max(np.abs(E(tau))) <= ZETA2 ** 2 / ZETA4


def test_e_factor_cache_returns_same_values(family_1e3):
    E = EFactor(family_1e3)
    tau = np.linspace(-5, 5, 11)
    first = E(tau)
    assert E(tau) is first
    assert E(2.0) == pytest.approx(complex(first[7]), abs=1e-14)


def test_e_factor_rejects_bad_input(family_1e3):
    with pytest.raises(DomainError):
        EFactor(family_1e3, mode='median')
    empty = DiscriminantFamily(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, 4), np.array([], dtype=np.int64))
    with pytest.raises(DomainError):
        e_factor(empty, 1.0)


def test_pole_quotient_branches_agree(integrand, small_spec):
    taus = np.geomspace(1e-6, 1e-3, 7)
    direct = integrand.pole_quotient(taus, 'direct')
    series = integrand.pole_quotient(taus, 'series')
    assert np.max(np.abs(direct - series)) <= 1e-6
    assert integrand.check_assembly() <= 10 * small_spec.abs_tol


def test_assembly_check_rejects_asymmetric_e_factor(family_1e3, small_spec):
    def lopsided(t):
        return 1 + 0.5j * np.abs(np.asarray(t, dtype=float))

    integrand = RatiosIntegrand(family_1e3, small_spec, euler=EULER, e_factor_fn=lopsided)
    # the Taylor branch still matches, only the far grid exposes the asymmetry
    near = small_spec.small_tau_radius * np.array([0.25, 1.0])
    assert np.allclose(integrand.pole_quotient(near, 'direct'), integrand.pole_quotient(near, 'series'))
    with pytest.raises(AssemblyError) as excinfo:
        integrand.check_assembly()
    assert excinfo.value.exit_code == 4


def test_assembled_integrand_is_smooth_and_conjugate_symmetric(integrand):
    at_zero = complex(integrand.values(0.0))
    assert math.isfinite(at_zero.real) and math.isfinite(at_zero.imag)
    assert abs(complex(integrand.values(1e-4)) - at_zero) <= 1e-2
    tau = np.array([0.5, 2.0, 17.0, 150.0])
    assert np.allclose(integrand.values(-tau), np.conj(integrand.values(tau)), atol=1e-10)


def test_unit_e_factor_hook(family_1e4, small_spec, hat2):
    def unit(t):
        return np.ones_like(np.asarray(t, dtype=float))

    hooked = RatiosIntegrand(family_1e4, small_spec, euler=EULER, e_factor_fn=unit)
    tau = np.array([1e-4, 0.3, 4.0, 60.0])
    w = 1j * hooked.beta * tau
    expected = (zeta_log_deriv_reg(w, hooked.kernel) + a_d_prime(w / 2, EULER)
                - zeta_reg(1 - w, hooked.kernel))
    assert np.allclose(hooked.values(tau), expected, atol=1e-13)
    value = zeta_ad_r_term(family_1e4, hat2, small_spec, euler=EULER, e_factor_fn=unit)
    assert math.isfinite(value)


def test_conductor_matches_scipy_quad(single, hat2, small_spec):
    L = single.log_x

    def h(t):
        return hat2.g(t) * special.psi(0.25 + 1j * math.pi * t / L).real

    integral, _ = integrate.quad(h, 0, 2000, limit=4000, epsabs=1e-12)
    expected = (float(hat2.g_hat(0.0)) * math.log(5 / math.pi) + 2 * integral) / L
    assert conductor_term(single, hat2, small_spec) == pytest.approx(expected, abs=1e-6)


def test_conductor_is_linear(single, hat2, small_spec):
    base = conductor_term(single, hat2, small_spec)
    assert conductor_term(single, hat2.scaled(2.5), small_spec) == pytest.approx(2.5 * base, abs=1e-12)


def test_r_term_single_discriminant(single, hat2, small_spec):
    value = r_term(single, hat2, small_spec)
    assert math.isfinite(value)
    assert r_term(single, hat2.scaled(3.0), small_spec) == pytest.approx(3 * value, abs=1e-10)
    assert r_term(single, hat2.scaled(0.0), small_spec) == 0.0


@pytest.mark.parametrize('sigma, X, expected', [
    (0.3, 10 ** 4, -0.15),
    (1.5, 10 ** 4, -0.75 + secondary_constant() / 3 / math.log(10 ** 4)),
])
def test_r_secondary_model(sigma, X, expected):
    assert r_secondary_model(make_fejer(sigma), X) == pytest.approx(expected, abs=1e-12)


def test_ratios_prediction_breakdown(family_1e4, hat2, small_spec):
    rc = ratios_prediction(family_1e4, hat2, small_spec, euler=EULER)
    assert rc.total == pytest.approx(rc.conductor_term + rc.zeta_ad_r_term, abs=1e-12)
    assert rc.error_budget >= 0
    assert rc.secondary_model == pytest.approx(-hat2.g0 / 2)
    assert abs(rc.total - usp_density_functional(hat2)) <= 10 / family_1e4.log_x
    assert set(rc.as_dict()) == {'conductor_term', 'zeta_ad_r_term', 'r_term_alone', 'secondary_model',
                                 'total', 'error_budget'}


def test_zero_test_function_gives_zero_breakdown(family_1e4, hat2, small_spec):
    zero = hat2.scaled(0.0)
    assert ratios_prediction(family_1e4, zero, small_spec) == RatiosBreakdown.zero()
    assert zeta_ad_r_term(family_1e4, zero, small_spec) == 0.0


def test_e_factor_consistency(family_1e3, hat2, small_spec):
    check = e_factor_consistency(family_1e3, hat2, small_spec)
    assert check.scale == pytest.approx(family_1e3.log_x / family_1e3.x_star)
    assert check.difference == pytest.approx(abs(check.exact - check.asymptotic))
    assert check.difference <= 50 * check.scale
    assert check.constant == pytest.approx(check.difference / check.scale)


@pytest.mark.slow
def test_r_term_decays_towards_minus_half_g0():
    f = make_fejer(0.3)
    spec = Config.quadrature_spec()
    points = []
    for X in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
        family = enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, X))
        points.append((X, abs(r_term(family, f, spec) + f.g0 / 2)))
    gaps = [gap for _, gap in points]
    assert all(b < a for a, b in zip(gaps, gaps[1:])), gaps
    assert fit_decay(points).slope <= -0.3


@pytest.mark.slow
def test_secondary_term_tracks_its_model():
    f = make_fejer(1.5)
    X = 10 ** 5
    family = enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, X))
    deviation = r_term(family, f, Config.quadrature_spec()) + f.g0 / 2
    model = r_secondary_model(f, X) + f.g0 / 2
    assert model == pytest.approx(secondary_constant() / 3 / math.log(X), abs=1e-12)
    assert deviation * model > 0
    assert 0.5 <= deviation / model <= 2
