import math

import mpmath
import numpy as np
import pytest

from errors import DomainError, PoleError
from specfun import (EULER_GAMMA, ZETA2, EulerProductSpec, ZetaKernel, a_d, a_d_euler_product, a_d_prime,
                     digamma, gamma_ratio, lambda_series, secondary_constant, zeta, zeta_log_deriv_reg,
                     zeta_prime, zeta_reg, zeta_reg_prime)

LOG_DERIV_2 = -0.5699610266


def _grid(points=100):
    rng = np.random.default_rng(7)
    return rng.uniform(0.5, 4.0, points) + 1j * rng.uniform(-200, 200, points)


def test_zeta_classical_values():
    assert zeta(2.0) == pytest.approx(math.pi ** 2 / 6, abs=1e-12)
    assert zeta(3.0) == pytest.approx(1.2020569031595942, abs=1e-12)
    assert ZETA2 == pytest.approx(1.6449340668, abs=1e-10)


def test_zeta_matches_mpmath_on_contract_domain():
    s = _grid(40)
    values = zeta(s)
    derivs = zeta_prime(s)
    for si, v, d in zip(s, values, derivs):
        ref = complex(mpmath.zeta(mpmath.mpc(si.real, si.imag)))
        ref_d = complex(mpmath.zeta(mpmath.mpc(si.real, si.imag), derivative=1))
        assert abs(v - ref) <= 1e-10
        assert abs(d - ref_d) <= 1e-9


def test_zeta_prime_matches_central_difference():
    h = 1e-6
    for s in (0.75 + 3j, 2.0 + 0j, 1.5 - 40j):
        numeric = (zeta(s + h) - zeta(s - h)) / (2 * h)
        assert abs(zeta_prime(s) - numeric) <= 1e-8


def test_zeta_pole_and_domain():
    with pytest.raises(PoleError):
        zeta(1.0)
    with pytest.raises(DomainError):
        zeta(2 + 500j)
    with pytest.raises(DomainError):
        zeta(0.25)
    wide = ZetaKernel().for_height(600)
    assert wide.max_imag == 600
    ref = complex(mpmath.zeta(mpmath.mpc(1.5, 500)))
    assert abs(zeta(1.5 + 500j, wide) - ref) <= 1e-9


def test_zeta_conjugate_symmetry():
    s = _grid(20)
    assert np.allclose(zeta(np.conj(s)), np.conj(zeta(s)), atol=1e-12)


def test_zeta_reg_through_the_pole():
    assert zeta_reg(1.0) == pytest.approx(EULER_GAMMA, abs=1e-12)
    assert zeta_reg(2.0) == pytest.approx(ZETA2 - 1, abs=1e-12)
    assert abs(zeta_reg(1 + 1e-6j) - EULER_GAMMA) <= 2e-6
    stieltjes_1 = float(mpmath.stieltjes(1))
    assert zeta_reg_prime(1.0) == pytest.approx(-stieltjes_1, abs=1e-10)


def test_zeta_reg_matches_unregularized_away_from_pole():
    s = np.array([0.6 + 10j, 1.2 - 3j, 3.0 + 100j])
    assert np.allclose(zeta_reg(s), zeta(s) - 1 / (s - 1), atol=1e-11)


def test_regularized_variants_continuous_at_zero():
    eps = 1e-8
    for fn in (zeta_log_deriv_reg, lambda w: zeta_reg(1 + w)):
        jump = max(abs(fn(1j * eps) - fn(-1j * eps)), abs(fn(eps) - fn(-eps)))
        assert jump <= 1e-6


def test_zeta_log_deriv_reg_values():
    assert zeta_log_deriv_reg(0.0) == pytest.approx(EULER_GAMMA, abs=1e-12)
    assert zeta_log_deriv_reg(1.0) == pytest.approx(1 + LOG_DERIV_2, abs=1e-9)
    w = 0.3 + 2.5j
    assert zeta_log_deriv_reg(np.conj(w)) == pytest.approx(np.conj(zeta_log_deriv_reg(w)), abs=1e-12)
    s = 1 + w
    ref = complex(mpmath.zeta(s, derivative=1) / mpmath.zeta(s)) + 1 / w
    assert zeta_log_deriv_reg(w) == pytest.approx(ref, abs=1e-10)


def test_kernel_self_check():
    assert ZetaKernel().self_check(_grid()) <= 1e-12


def test_digamma():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-12)
    assert digamma(0.25) == pytest.approx(-EULER_GAMMA - 3 * math.log(2) - math.pi / 2, abs=1e-12)
    s = 0.3 + 17j
    assert digamma(np.conj(s)) == pytest.approx(np.conj(digamma(s)), abs=1e-12)
    assert digamma(s) == pytest.approx(complex(mpmath.digamma(mpmath.mpc(0.3, 17))), abs=1e-12)
    with pytest.raises(PoleError):
        digamma(-2.0)


def test_gamma_ratio_is_a_phase():
    assert gamma_ratio(0.0) == pytest.approx(1.0, abs=1e-15)
    theta = np.linspace(-100, 100, 2001)
    values = gamma_ratio(theta)
    assert np.max(np.abs(np.abs(values) - 1)) <= 1e-12
    assert np.allclose(gamma_ratio(-theta), np.conj(values), atol=1e-12)
    ref = complex(mpmath.gamma(mpmath.mpc(0.25, -3)) / mpmath.gamma(mpmath.mpc(0.25, 3)))
    assert gamma_ratio(3.0) == pytest.approx(ref, abs=1e-12)


def test_a_d_closed_form():
    assert a_d(0.0) == pytest.approx(1.0, abs=1e-13)
    r = 2j * math.pi * 1.7 / math.log(10 ** 6)
    assert a_d(np.conj(r)) == pytest.approx(np.conj(a_d(r)), abs=1e-13)
    assert a_d(r) == pytest.approx(ZETA2 / complex(mpmath.zeta(2 - 2 * r)), abs=1e-11)


def test_euler_product_single_factor_is_one():
    assert a_d_euler_product(0.0, EulerProductSpec(prime_limit=2)) == pytest.approx(1.0, abs=1e-15)


def test_euler_product_at_zero():
    assert a_d_euler_product(0.0, EulerProductSpec(prime_limit=10 ** 5)) == pytest.approx(1.0, abs=1e-5)


def test_euler_product_matches_closed_form():
    taus = np.linspace(-5, 5, 41)
    r = 2j * math.pi * taus / math.log(10 ** 6)
    product = a_d_euler_product(r, EulerProductSpec(prime_limit=10 ** 5))
    assert np.max(np.abs(product - a_d(r))) <= 1e-5


def test_euler_product_converges_with_limit():
    r = 2j * math.pi * np.array([1.0, 3.0]) / math.log(10 ** 6)
    closed = a_d(r)
    errors = [np.abs(a_d_euler_product(r, EulerProductSpec(prime_limit=P)) - closed) for P in (10 ** 3, 10 ** 4, 10 ** 5)]
    assert np.all(errors[0] > errors[1])
    assert np.all(errors[1] > errors[2])


def test_euler_spec_tail_shrinks():
    tails = [EulerProductSpec(prime_limit=P).tail_estimate for P in (10 ** 3, 10 ** 4, 10 ** 5)]
    assert tails[0] > tails[1] > tails[2]


def test_euler_product_domain():
    with pytest.raises(DomainError):
        a_d_euler_product(0.5)
    with pytest.raises(DomainError):
        a_d_prime(-0.6)


def test_a_d_prime_matches_lambda_series():
    spec = EulerProductSpec(prime_limit=10 ** 6)
    value = a_d_prime(0.0, spec)
    assert value.real == pytest.approx(-LOG_DERIV_2, abs=2e-6)
    assert abs(value.real - lambda_series(10 ** 6)) <= 10 * spec.tail_estimate


def test_a_d_prime_first_term_and_symmetry():
    assert a_d_prime(0.0, EulerProductSpec(prime_limit=2)) == pytest.approx(math.log(2) / 3, abs=1e-12)
    r = 0.4j
    assert a_d_prime(np.conj(r)) == pytest.approx(np.conj(a_d_prime(r)), abs=1e-13)


def test_secondary_constant():
    assert secondary_constant() == pytest.approx(5.2226, abs=5e-4)
