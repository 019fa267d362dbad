"""
Ratios Conjecture side of the one-level density.

Every term is an integral of g(tau) against a factor assembled from specfun.
The family enters only through the conductor average and the E-factor
E(tau) = <exp(-2 pi i tau log(d/pi)/L)>_d * Gamma(1/4 - i pi tau/L)/Gamma(1/4 + i pi tau/L) * a_d(2 pi i tau/L),
with L = log X.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from arith import DiscriminantFamily, disc_exp_sum
from config import Config
from errors import AssemblyError, DomainError
from quadrature import (QuadratureSpec, integrate_even, oscillatory_tail_bound,
                        principal_value_even, sample_amplitude)
from specfun import (EulerProductSpec, ZetaKernel, a_d, a_d_prime, digamma, gamma_ratio,
                     secondary_constant, zeta, zeta_log_deriv_reg, zeta_reg)
from testfn import TestFunction

logger = logging.getLogger(__name__)

_E_CACHE_SIZE = 16


@dataclass(frozen=True)
class RatiosBreakdown:
    conductor_term: float
    zeta_ad_r_term: float
    r_term_alone: float
    secondary_model: float
    total: float
    error_budget: float

    @classmethod
    def zero(cls) -> 'RatiosBreakdown':
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EFactorConsistency:
    exact: float
    asymptotic: float
    difference: float
    scale: float

    @property
    def constant(self) -> float:
        """measured C in difference <= C log X / X*"""
        return self.difference / self.scale if self.scale else math.inf


def _require_members(family: DiscriminantFamily):
    if family.x_star == 0:
        raise DomainError("the discriminant family is empty", remedy="raise X")


def _height_kernel(kernel: Optional[ZetaKernel], spec: QuadratureSpec, L: float) -> ZetaKernel:
    kernel = kernel or Config.zeta_kernel()
    return kernel.for_height(4 * math.pi * 2 * spec.truncation_T / L * 1.01)


def _tail_frequency(f: TestFunction, beta: float) -> float:
    return min(beta * math.log(2), f.g_frequency) / 2


class EFactor:
    """
    E(tau) for a family, exact (literal d-sum) or asymptotic (main term of the
    d-sum). Values are cached per node array, so terms sharing a quadrature
    grid evaluate the d-sum once.
    """

    def __init__(self, family: DiscriminantFamily, mode: str = 'exact',
                 kernel: Optional[ZetaKernel] = None):
        if mode not in ('exact', 'asymptotic'):
            raise DomainError(f"unknown E-factor mode '{mode}'", remedy="use 'exact' or 'asymptotic'")
        _require_members(family)
        self.family = family
        self.mode = mode
        self.kernel = kernel or Config.zeta_kernel()
        self._cache = {}

    def _compute(self, tau: np.ndarray) -> np.ndarray:
        L = self.family.log_x
        d_mean = np.asarray(disc_exp_sum(self.family, tau, exact=self.mode == 'exact')) / self.family.x_star
        height = 4 * math.pi * float(np.max(np.abs(tau), initial=0.0)) / L
        kernel = self.kernel.for_height(height * 1.01)
        return d_mean * gamma_ratio(math.pi * tau / L) * np.asarray(a_d(2j * math.pi * tau / L, kernel))

    def __call__(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        key = (tau_arr.shape, tau_arr.tobytes())
        value = self._cache.get(key)
        if value is None:
            value = self._compute(tau_arr.ravel()).reshape(tau_arr.shape)
            if len(self._cache) >= _E_CACHE_SIZE:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = value
        return complex(value) if np.ndim(tau) == 0 else value


def e_factor(family: DiscriminantFamily, tau, mode: str = 'exact', kernel: Optional[ZetaKernel] = None):
    return EFactor(family, mode, kernel)(tau)


class RatiosIntegrand:
    """
    F(tau) = zld_reg(w) + A_D'(w/2) - E(tau) zeta_reg(1 - w) + (E(tau) - 1)/w, w = 4 pi i tau/L.

    The 1/w poles of zeta'/zeta(1 + w) and -E zeta(1 - w) are already combined
    into (E - 1)/w. Below small_tau_radius that quotient comes from a Taylor
    polynomial of E with Richardson-extrapolated derivatives.
    """

    def __init__(self, family: DiscriminantFamily, spec: QuadratureSpec,
                 kernel: Optional[ZetaKernel] = None, euler: Optional[EulerProductSpec] = None,
                 e_factor_fn: Optional[Callable] = None):
        _require_members(family)
        self.family = family
        self.spec = spec
        self.L = family.log_x
        self.beta = 4 * math.pi / self.L
        self.kernel = _height_kernel(kernel, spec, self.L)
        self.euler = euler or EulerProductSpec(Config.EULER_PRIME_LIMIT)
        self.E = e_factor_fn or EFactor(family, kernel=self.kernel)
        self._derivatives = None

    def e_values(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        return np.broadcast_to(np.asarray(self.E(tau), dtype=complex), tau.shape)

    def derivatives(self):
        """E'(0), E''(0), E'''(0) from central differences at h/2 and h, using E(-x) = conj E(x)"""
        if self._derivatives is None:
            h = self.spec.small_tau_radius
            e_half, e_one, e_two = self.e_values(np.array([h / 2, h, 2 * h]))

            def d1(e, x):
                return 1j * e.imag / x

            def d2(e, x):
                return 2 * (e.real - 1) / x ** 2

            def d3(e, e_double, x):
                return 1j * (e_double.imag - 2 * e.imag) / x ** 3

            first = (4 * d1(e_half, h / 2) - d1(e_one, h)) / 3
            second = (4 * d2(e_half, h / 2) - d2(e_one, h)) / 3
            third = (4 * d3(e_half, e_one, h / 2) - d3(e_one, e_two, h)) / 3
            self._derivatives = (complex(first), complex(second), complex(third))
        return self._derivatives

    def pole_quotient(self, tau, branch: str = 'auto') -> np.ndarray:
        """(E(tau) - 1)/w by the direct form, the Taylor branch, or whichever fits |tau|"""
        tau = np.asarray(tau, dtype=float)
        if branch == 'auto':
            small = np.abs(tau) < self.spec.small_tau_radius
        else:
            small = np.full(tau.shape, branch == 'series')
        out = np.empty(tau.shape, dtype=complex)
        if np.any(small):
            e1, e2, e3 = self.derivatives()
            ts = tau[small]
            out[small] = (e1 + e2 * ts / 2 + e3 * ts ** 2 / 6) / (1j * self.beta)
        if np.any(~small):
            tb = tau[~small]
            out[~small] = (self.e_values(tb) - 1) / (1j * self.beta * tb)
        return out

    def values(self, tau, branch: str = 'auto') -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        w = 1j * self.beta * tau
        core = (np.asarray(zeta_log_deriv_reg(w, self.kernel)) + np.asarray(a_d_prime(w / 2, self.euler))
                - self.e_values(tau) * np.asarray(zeta_reg(1 - w, self.kernel)))
        return core + self.pole_quotient(tau, branch)

    def check_assembly(self, points: int = 8) -> float:
        """
        Largest of two assembly gaps: the Taylor branch against the direct
        quotient on (0, h], and Im(F(tau) + F(-tau)) on a geometric grid over
        [h, T], which vanishes when F pairs to a real integrand.
        """
        h = self.spec.small_tau_radius
        near = h * np.array([0.25, 0.5, 1.0])
        branch_gap = float(np.max(np.abs(self.pole_quotient(near, 'direct') - self.pole_quotient(near, 'series'))))
        if branch_gap > 10 * self.spec.abs_tol:
            raise AssemblyError(
                f"small-tau branch disagrees with the direct form by {branch_gap:.3g} on (0, {h:g}]",
                remedy="check the E-factor symmetry or shrink quad.small_tau")
        far = np.geomspace(h, self.spec.truncation_T, points)
        pair_gap = float(np.max(np.abs(np.imag(self.values(far) + self.values(-far)))))
        if pair_gap > 10 * self.spec.abs_tol:
            raise AssemblyError(
                f"assembled integrand is not conjugate symmetric: Im(F(tau) + F(-tau)) reaches {pair_gap:.3g}",
                remedy="check the E-factor hook satisfies E(-tau) = conj E(tau)")
        return max(branch_gap, pair_gap)


def _conductor(family: DiscriminantFamily, f: TestFunction, spec: QuadratureSpec):
    L = family.log_x
    mean_log = float(np.mean(family.log_d_over_pi))

    def h(t):
        return f.g(t) * np.real(digamma(0.25 + 1j * math.pi * np.asarray(t) / L))

    result = integrate_even(
        h, spec,
        tail_bound=lambda T: 4 * (abs(math.log(math.pi * T / L)) + 2) * f.envelope(T) / f.g_frequency,
        tail_value=lambda T: 2 * f.mean_log_mass(T, math.pi / L))
    value = (float(f.g_hat(0.0)) * mean_log + result.real) / L
    return value, result.error_budget / L


def _zeta_ad_r(integrand: RatiosIntegrand, f: TestFunction, spec: QuadratureSpec):
    integrand.check_assembly()

    def H(t):
        return np.real(integrand.values(t))

    amplitude = sample_amplitude(H, spec.truncation_T)
    result = integrate_even(lambda t: f.g(t) * H(t), spec,
                            tail_bound=oscillatory_tail_bound(f, amplitude, _tail_frequency(f, integrand.beta)))
    return 2 * result.real / integrand.L, 2 * result.error_budget / integrand.L


def _r_term(integrand: RatiosIntegrand, f: TestFunction, spec: QuadratureSpec):
    beta, kernel = integrand.beta, integrand.kernel

    def H(t):
        t = np.asarray(t, dtype=float)
        return integrand.e_values(t) * np.asarray(zeta(1 - 1j * beta * t, kernel))

    amplitude = sample_amplitude(lambda t: np.real(H(t)), spec.truncation_T)
    result = principal_value_even(lambda t: f.g(t) * H(t), spec,
                                  tail_bound=oscillatory_tail_bound(f, amplitude, _tail_frequency(f, beta)),
                                  conjugate_symmetric=True)
    return -2 * result.real / integrand.L, 2 * result.error_budget / integrand.L


def conductor_term(family: DiscriminantFamily, f: TestFunction, spec: Optional[QuadratureSpec] = None) -> float:
    """(1/L) [g_hat(0) <log(d/pi)>_d + integral of g(tau) Re psi(1/4 + i pi tau/L)]"""
    _require_members(family)
    return _conductor(family, f, spec or Config.quadrature_spec())[0]


def zeta_ad_r_term(family: DiscriminantFamily, f: TestFunction, spec: Optional[QuadratureSpec] = None,
                   kernel: Optional[ZetaKernel] = None, euler: Optional[EulerProductSpec] = None,
                   e_factor_fn: Optional[Callable] = None) -> float:
    """(2/L) * integral of g(tau) F(tau); e_factor_fn replaces E(tau) (e.g. E = 1)"""
    spec = spec or Config.quadrature_spec()
    if f.is_zero:
        return 0.0
    integrand = RatiosIntegrand(family, spec, kernel, euler, e_factor_fn)
    return _zeta_ad_r(integrand, f, spec)[0]


def r_term(family: DiscriminantFamily, f: TestFunction, spec: Optional[QuadratureSpec] = None,
           kernel: Optional[ZetaKernel] = None, e_factor_fn: Optional[Callable] = None) -> float:
    """R(g; X) = -(2/L) PV integral of g(tau) E(tau) zeta(1 - 4 pi i tau/L)"""
    spec = spec or Config.quadrature_spec()
    if f.is_zero:
        return 0.0
    integrand = RatiosIntegrand(family, spec, kernel, e_factor_fn=e_factor_fn)
    return _r_term(integrand, f, spec)[0]


def r_secondary_model(f: TestFunction, X: float, log_x: Optional[float] = None) -> float:
    """-g(0)/2 + c g_hat(1)/log X; the second term is nonzero only when sigma > 1"""
    L = log_x or math.log(X)
    return -f.g0 / 2 + secondary_constant() * float(f.g_hat(1.0)) / L


def ratios_prediction(family: DiscriminantFamily, f: TestFunction, spec: Optional[QuadratureSpec] = None,
                      kernel: Optional[ZetaKernel] = None,
                      euler: Optional[EulerProductSpec] = None) -> RatiosBreakdown:
    spec = spec or Config.quadrature_spec()
    _require_members(family)
    if f.is_zero:
        return RatiosBreakdown.zero()

    integrand = RatiosIntegrand(family, spec, kernel, euler)
    L = integrand.L
    conductor, conductor_err = _conductor(family, f, spec)
    combined, combined_err = _zeta_ad_r(integrand, f, spec)
    r_alone, _ = _r_term(integrand, f, spec)
    # integral of |g| is g_hat(0) for both kinds (g >= 0)
    euler_err = 2 / L * integrand.euler.tail_estimate * abs(float(f.g_hat(0.0)))

    breakdown = RatiosBreakdown(
        conductor_term=conductor,
        zeta_ad_r_term=combined,
        r_term_alone=r_alone,
        secondary_model=r_secondary_model(f, family.spec.x_max, log_x=L),
        total=conductor + combined,
        error_budget=conductor_err + combined_err + euler_err,
    )
    logger.info("ratios side X=%d: conductor=%.8f zeta_ad_r=%.8f r=%.8f total=%.8f",
                family.spec.x_max, conductor, combined, r_alone, breakdown.total)
    return breakdown


def e_factor_consistency(family: DiscriminantFamily, f: TestFunction, spec: Optional[QuadratureSpec] = None,
                         kernel: Optional[ZetaKernel] = None) -> EFactorConsistency:
    """zeta_ad_r_term with the literal d-sum against the asymptotic d-sum"""
    spec = spec or Config.quadrature_spec()
    exact = zeta_ad_r_term(family, f, spec, kernel)
    asymptotic = zeta_ad_r_term(family, f, spec, kernel, e_factor_fn=EFactor(family, 'asymptotic', kernel))
    return EFactorConsistency(exact=exact, asymptotic=asymptotic, difference=abs(exact - asymptotic),
                              scale=family.log_x / family.x_star)
