import math

import numpy as np
import pytest

from errors import DomainError
from quadrature import QuadratureSpec
from testfn import (TestFunctionKind, g_hat_integral, make_fejer, make_fejer_squared_hat, make_test_function,
                    numerical_g_hat, sinc_pairing_check, usp_density_functional)


def test_fejer_pair():
    f = make_fejer(0.3)
    assert f.g(0.0) == pytest.approx(0.3)
    assert f.g0 == pytest.approx(0.3)
    assert f.g_hat(0.0) == 1.0
    assert f.g_hat(0.3) == 0.0
    assert make_fejer(1.5).g_hat(1.0) == pytest.approx(1 / 3)


def test_hat2_pair():
    f = make_fejer_squared_hat(0.3)
    assert f.g_hat(0.0) == pytest.approx(1.0)
    assert f.g_hat(0.3) == pytest.approx(0.0, abs=1e-15)
    assert f.g0 == pytest.approx(0.225)
    assert g_hat_integral(f, -0.3, 0.3) == pytest.approx(f.g0, abs=1e-12)


@pytest.mark.parametrize('make', [make_fejer, make_fejer_squared_hat])
def test_even_and_supported(make):
    f = make(0.7)
    x = np.linspace(0, 40, 201)
    assert np.allclose(f.g(x), f.g(-x))
    xi = np.linspace(0, 2, 101)
    assert np.allclose(f.g_hat(xi), f.g_hat(-xi))
    assert np.all(f.g_hat(xi[xi > 0.71]) == 0)
    assert g_hat_integral(f, -0.7, 0.7) == pytest.approx(f.g0, abs=1e-12)


@pytest.mark.parametrize('make', [make_fejer, make_fejer_squared_hat])
def test_envelope_bounds_g(make):
    f = make(0.3)
    for T in (50.0, 200.0, 1000.0):
        tau = np.linspace(T, 5 * T, 4001)
        assert np.max(np.abs(f.g(tau))) <= f.envelope(T)


def test_fejer_decay_bound():
    f = make_fejer(0.3)
    tau = np.linspace(1, 500, 5000)
    assert np.all(np.abs(f.g(tau)) <= 1 / (math.pi ** 2 * 0.3 * tau ** 2) + 1e-15)


def test_parse_and_lookup():
    assert make_test_function('hat2', 0.5).kind is TestFunctionKind.FEJER_SQUARED_HAT
    assert make_test_function('FEJER', 0.5).kind is TestFunctionKind.FEJER
    with pytest.raises(DomainError):
        make_test_function('gaussian', 0.5)
    with pytest.raises(DomainError):
        make_fejer(0.0)


def test_scaled():
    f = make_fejer(0.3)
    double = f.scaled(2.0)
    assert double.g(1.3) == pytest.approx(2 * f.g(1.3))
    assert double.g_hat(0.1) == pytest.approx(2 * f.g_hat(0.1))
    zero = f.scaled(0.0)
    assert zero.is_zero
    assert zero.g0 == 0


@pytest.mark.parametrize('sigma, expected', [
    (1 / 3, 5 / 6),
    (2.0, 1 / 4),
])
def test_usp_density_functional_fejer(sigma, expected):
    assert usp_density_functional(make_fejer(sigma)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('make', [make_fejer, make_fejer_squared_hat])
def test_usp_identity_below_one(make):
    f = make(0.6)
    assert usp_density_functional(f) == pytest.approx(float(f.g_hat(0.0)) - f.g0 / 2, abs=1e-12)
    assert usp_density_functional(f.scaled(3.0)) == pytest.approx(3 * usp_density_functional(f), abs=1e-12)


def test_sinc_pairing_fejer():
    assert sinc_pairing_check(make_fejer(1 / 3)) == pytest.approx(1 / 6, abs=1e-6)
    assert sinc_pairing_check(make_fejer(2.0)) == pytest.approx(3 / 4, abs=1e-6)


def test_sinc_pairing_hat2():
    f = make_fejer_squared_hat(0.5)
    spec = QuadratureSpec(truncation_T=400, panels=400, abs_tol=1e-8)
    assert sinc_pairing_check(f, spec) == pytest.approx(f.g0 / 2, abs=1e-7)


@pytest.mark.parametrize('make', [make_fejer, make_fejer_squared_hat])
def test_numerical_transform_recovers_g_hat(make):
    f = make(0.5)
    for xi in (0.0, 0.1, 0.25, 0.4, 0.6):
        assert numerical_g_hat(f, xi) == pytest.approx(float(f.g_hat(xi)), abs=1e-4)
