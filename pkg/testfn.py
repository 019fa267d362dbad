"""Even test functions with compactly supported Fourier transforms, and the USp density functional"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from errors import DomainError
from quadrature import (QuadratureSpec, decaying_tail_bound, integrate_even,
                        integrate_interval, sum_bounds)

logger = logging.getLogger(__name__)


class TestFunctionKind(Enum):
    __test__ = False

    FEJER = 'fejer'
    FEJER_SQUARED_HAT = 'hat2'

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise DomainError(f"unknown test function '{name}'", remedy="use 'fejer' or 'hat2'")


def _cubic_bspline(t: np.ndarray) -> np.ndarray:
    """Centered cubic B-spline on [-2, 2] (triangle * triangle)"""
    t = np.abs(t)
    out = np.where(t <= 1, (4 - 6 * t ** 2 + 3 * t ** 3) / 6, (2 - t) ** 3 / 6)
    return np.where(t < 2, out, 0.0)


@dataclass(frozen=True)
class TestFunction:
    """
    g with supp g_hat in [-sigma, sigma]. `scale` multiplies both g and g_hat,
    so scaled(0) is the zero function.
    """
    __test__ = False

    kind: TestFunctionKind
    sigma: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"test function needs sigma > 0, got {self.sigma}")

    @property
    def _a(self) -> float:
        return self.sigma / 2

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is TestFunctionKind.FEJER:
            return self.scale * self.sigma * np.sinc(self.sigma * x) ** 2
        return self.scale * 1.5 * self._a * np.sinc(self._a * x) ** 4

    def g_hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.kind is TestFunctionKind.FEJER:
            return self.scale * np.maximum(0.0, 1 - np.abs(xi) / self.sigma)
        return self.scale * 1.5 * _cubic_bspline(xi / self._a)

    @property
    def g0(self) -> float:
        if self.kind is TestFunctionKind.FEJER:
            return self.scale * self.sigma
        return self.scale * 1.5 * self._a

    @property
    def is_zero(self) -> bool:
        return self.scale == 0

    @property
    def kinks(self):
        if self.kind is TestFunctionKind.FEJER:
            return (-self.sigma, 0.0, self.sigma)
        return (-self.sigma, -self._a, 0.0, self._a, self.sigma)

    @property
    def g_frequency(self) -> float:
        """Lowest angular frequency of the oscillating part of g at large tau"""
        if self.kind is TestFunctionKind.FEJER:
            return 2 * math.pi * self.sigma
        return 2 * math.pi * self._a

    # Decay metadata for quadrature tails

    def envelope(self, T: float) -> float:
        """Bound on |g(tau)| for |tau| >= T"""
        s = abs(self.scale)
        if self.kind is TestFunctionKind.FEJER:
            return s / (math.pi ** 2 * self.sigma * T ** 2)
        return s * 1.5 / (math.pi ** 4 * self._a ** 3 * T ** 4)

    def envelope_mass(self, T: float) -> float:
        s = abs(self.scale)
        if self.kind is TestFunctionKind.FEJER:
            return s / (math.pi ** 2 * self.sigma * T)
        return s * 0.5 / (math.pi ** 4 * self._a ** 3 * T ** 3)

    def mean_mass(self, T: float) -> float:
        """Non-oscillatory part of the one-sided tail integral of g beyond T"""
        if self.kind is TestFunctionKind.FEJER:
            return self.scale / (2 * math.pi ** 2 * self.sigma * T)
        return self.scale * 3 / (16 * math.pi ** 4 * self._a ** 3 * T ** 3)

    def mean_log_mass(self, T: float, scale: float) -> float:
        """One-sided tail of the non-oscillatory part of g against log(scale * tau)"""
        lg = math.log(scale * T)
        if self.kind is TestFunctionKind.FEJER:
            return self.scale * (lg + 1) / (2 * math.pi ** 2 * self.sigma * T)
        c = 9 / (16 * math.pi ** 4 * self._a ** 3)
        return self.scale * c * (lg / 3 + 1 / 9) / T ** 3

    def mean_residual(self, T: float) -> float:
        """Bound on the oscillatory remainder of the one-sided tail of g"""
        s = abs(self.scale)
        if self.kind is TestFunctionKind.FEJER:
            return s / (2 * math.pi ** 3 * self.sigma ** 2 * T ** 2)
        return s * 1.5 / (math.pi ** 4 * self._a ** 3 * T ** 4) * 9 / (16 * math.pi * self._a)

    def scaled(self, c: float) -> 'TestFunction':
        return replace(self, scale=self.scale * c)


def make_fejer(sigma: float) -> TestFunction:
    return TestFunction(TestFunctionKind.FEJER, float(sigma))


def make_fejer_squared_hat(sigma: float) -> TestFunction:
    return TestFunction(TestFunctionKind.FEJER_SQUARED_HAT, float(sigma))


def make_test_function(kind, sigma: float) -> TestFunction:
    return TestFunction(TestFunctionKind.parse(kind), float(sigma))


def g_hat_integral(f: TestFunction, lo: float, hi: float) -> float:
    """Integral of g_hat over [lo, hi], split at the kinks"""
    return float(integrate_interval(f.g_hat, lo, hi, breakpoints=f.kinks, nodes=16))


def usp_density_functional(f: TestFunction) -> float:
    """Integral of g(x)(1 - sin(2 pi x)/(2 pi x)) as g_hat(0) - (1/2) int_{-1}^{1} g_hat"""
    return float(f.g_hat(0.0)) - 0.5 * g_hat_integral(f, -1.0, 1.0)


def sinc_pairing_check(f: TestFunction, spec: Optional[QuadratureSpec] = None) -> float:
    """Integral of g(x) sin(2 pi x)/(2 pi x), computed in the x-domain"""
    spec = spec or QuadratureSpec(abs_tol=1e-6)
    result = integrate_even(lambda x: f.g(x) * np.sinc(2 * x), spec,
                            tail_bound=decaying_tail_bound(f, 1 / (2 * math.pi), 1))
    return result.real


def numerical_g_hat(f: TestFunction, xi: float, spec: Optional[QuadratureSpec] = None) -> float:
    """Fourier transform of g at xi by quadrature over |x| <= 200/sigma"""
    T = 200 / f.sigma
    spec = spec or QuadratureSpec(truncation_T=T, panels=int(math.ceil(T)), abs_tol=1e-4)
    T = spec.truncation_T
    xi = abs(float(xi))
    freqs = [2 * math.pi * xi, 2 * math.pi * abs(xi - f.sigma), 2 * math.pi * (xi + f.sigma)]

    def one_frequency(omega):
        if omega < 1e-9:
            return lambda t: 2 * f.envelope_mass(t)
        return lambda t: 4 * f.envelope(t) / omega

    tail_value = (lambda t: 2 * f.mean_mass(t)) if xi == 0 else None
    tail_bound = (lambda t: 2 * f.mean_residual(t)) if xi == 0 else sum_bounds(*map(one_frequency, freqs))
    result = integrate_even(lambda x: f.g(x) * np.cos(2 * math.pi * xi * x), spec,
                            tail_bound=tail_bound, tail_value=tail_value)
    return result.real
