"""
Special functions with accuracy contracts.

zeta and its derivative come from a vectorized Euler-Maclaurin evaluation with
differentiated correction terms. The pole at s = 1 is removed analytically in
the regularized variants, so zeta_reg and zeta_log_deriv_reg stay smooth across
it. Digamma and log-Gamma are taken from scipy.special.
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import bernoulli, loggamma, psi

from errors import DomainError, PoleError

logger = logging.getLogger(__name__)

EULER_GAMMA = float(np.euler_gamma)
ZETA2 = math.pi ** 2 / 6

_BLOCK = 1024
_HEIGHT_BUCKET = 16.0
_Q_SERIES_RADIUS = 0.25
_Q_TERMS = 14


@lru_cache(maxsize=8)
def _em_coefficients(order: int) -> np.ndarray:
    """B_{2k} / (2k)! for k = 1..order"""
    b = bernoulli(2 * order)
    return np.array([b[2 * k] / math.factorial(2 * k) for k in range(1, order + 1)])


def _q_and_dq(v: np.ndarray):
    """q(v) = (exp(-v) - 1)/v and q'(v), stable near v = 0"""
    q = np.empty_like(v)
    dq = np.empty_like(v)
    small = np.abs(v) < _Q_SERIES_RADIUS
    if np.any(small):
        vs = v[small]
        qs = np.zeros_like(vs)
        dqs = np.zeros_like(vs)
        # q = sum_{m>=1} (-1)^m v^{m-1}/m!, q' = sum_{m>=2} (-1)^m (m-1) v^{m-2}/m!
        for m in range(_Q_TERMS, 0, -1):
            qs = qs * vs + (-1) ** m / math.factorial(m)
        for m in range(_Q_TERMS, 1, -1):
            dqs = dqs * vs + (-1) ** m * (m - 1) / math.factorial(m)
        q[small] = qs
        dq[small] = dqs
    big = ~small
    if np.any(big):
        vb = v[big]
        e = np.exp(-vb)
        q[big] = (e - 1) / vb
        dq[big] = (1 - e * (1 + vb)) / vb ** 2
    return q, dq


@dataclass(frozen=True)
class ZetaKernel:
    em_cutoff: int = 20
    bernoulli_order: int = 20
    target_abs_error: float = 1e-12
    max_imag: float = 200.0
    min_real: float = 0.5
    max_real: float = 4.0

    def for_height(self, t_max: float) -> 'ZetaKernel':
        """Same kernel with the contract widened to |Im s| <= t_max"""
        return replace(self, max_imag=max(self.max_imag, float(t_max)))

    def refined(self) -> 'ZetaKernel':
        return replace(self, em_cutoff=2 * self.em_cutoff, bernoulli_order=2 * self.bernoulli_order)

    def _check_domain(self, s: np.ndarray):
        if s.size == 0:
            return
        if (np.any(s.real < self.min_real - 1e-12) or np.any(s.real > self.max_real + 1e-12)
                or np.any(np.abs(s.imag) > self.max_imag * (1 + 1e-12))):
            raise DomainError(
                f"zeta argument outside contract domain Re in [{self.min_real}, {self.max_real}], "
                f"|Im| <= {self.max_imag}",
                remedy="use ZetaKernel.for_height() to widen the height contract")

    def _cutoffs(self, s: np.ndarray) -> np.ndarray:
        # bucketed by |s| so a point's cutoff never depends on its neighbours
        size = np.ceil(np.abs(s) / _HEIGHT_BUCKET) * _HEIGHT_BUCKET
        N = np.ceil((size + 2 * self.bernoulli_order) / math.pi).astype(np.int64) + 1
        return np.maximum(N, self.em_cutoff)

    def _block(self, s: np.ndarray, N: int, regularized: bool):
        n = np.arange(1, N, dtype=float)
        logn = np.log(n)
        powers = np.exp(-np.outer(s, logn))
        direct = powers.sum(axis=1)
        direct_d = -(powers * logn).sum(axis=1)

        logN = math.log(N)
        N_s = np.exp(-s * logN)
        if regularized:
            q, dq = _q_and_dq((s - 1) * logN)
            main = logN * q
            main_d = logN ** 2 * dq
        else:
            N_1s = N * N_s
            main = N_1s / (s - 1)
            main_d = -N_1s * (logN / (s - 1) + 1 / (s - 1) ** 2)

        value = direct + main + N_s / 2
        deriv = direct_d + main_d - logN * N_s / 2

        poly = s.copy()
        harmonic = 1 / s
        for k, coef in enumerate(_em_coefficients(self.bernoulli_order), start=1):
            scale = N_s * float(N) ** (1 - 2 * k)
            value = value + coef * poly * scale
            deriv = deriv + coef * scale * (poly * harmonic - logN * poly)
            # (s)_{2k+1} from (s)_{2k-1}
            a, b = s + 2 * k - 1, s + 2 * k
            poly = poly * a * b
            harmonic = harmonic + 1 / a + 1 / b
        return value, deriv

    def evaluate(self, s, regularized: bool = False):
        """
        (value, derivative) of zeta, or of zeta - 1/(s-1) when regularized.
        Points sharing a cutoff are evaluated together in blocks.
        """
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
        self._check_domain(s_arr)
        if not regularized and np.any(s_arr == 1):
            raise PoleError("zeta has a pole at s = 1", remedy="use zeta_reg")
        value = np.empty_like(s_arr)
        deriv = np.empty_like(s_arr)
        cutoffs = self._cutoffs(s_arr)
        for N in np.unique(cutoffs).tolist():
            group = np.flatnonzero(cutoffs == N)
            for i in range(0, len(group), _BLOCK):
                idx = group[i:i + _BLOCK]
                value[idx], deriv[idx] = self._block(s_arr[idx], int(N), regularized)
        shape = np.shape(s)
        return value.reshape(shape), deriv.reshape(shape)

    def self_check(self, points) -> float:
        """Max deviation of zeta and zeta' from the refined kernel over points"""
        points = np.asarray(points, dtype=complex)
        v1, d1 = self.evaluate(points, regularized=True)
        v2, d2 = self.refined().evaluate(points, regularized=True)
        return float(max(np.max(np.abs(v1 - v2)), np.max(np.abs(d1 - d2))))


DEFAULT_KERNEL = ZetaKernel()


def _unwrap(value, s):
    return complex(value) if np.ndim(s) == 0 else value


def zeta(s, kernel: Optional[ZetaKernel] = None):
    value, _ = (kernel or DEFAULT_KERNEL).evaluate(s)
    return _unwrap(value, s)


def zeta_prime(s, kernel: Optional[ZetaKernel] = None):
    _, deriv = (kernel or DEFAULT_KERNEL).evaluate(s)
    return _unwrap(deriv, s)


def zeta_reg(s, kernel: Optional[ZetaKernel] = None):
    """zeta(s) - 1/(s-1); analytic through s = 1 where it equals Euler's gamma"""
    value, _ = (kernel or DEFAULT_KERNEL).evaluate(s, regularized=True)
    return _unwrap(value, s)


def zeta_reg_prime(s, kernel: Optional[ZetaKernel] = None):
    _, deriv = (kernel or DEFAULT_KERNEL).evaluate(s, regularized=True)
    return _unwrap(deriv, s)


def zeta_log_deriv_reg(w, kernel: Optional[ZetaKernel] = None):
    """
    zeta'/zeta(1+w) + 1/w, analytic through w = 0.

    With zeta = 1/w + r and zeta' = -1/w^2 + r', the sum reduces to
    (r + w r') / (1 + w r), which has no cancellation near w = 0.
    """
    w_arr = np.asarray(w, dtype=complex)
    r, dr = (kernel or DEFAULT_KERNEL).evaluate(1 + w_arr, regularized=True)
    return _unwrap((r + w_arr * dr) / (1 + w_arr * r), w)


def digamma(s):
    s_arr = np.asarray(s, dtype=complex)
    at_pole = (s_arr.imag == 0) & (s_arr.real <= 0) & (s_arr.real == np.round(s_arr.real))
    if np.any(at_pole):
        raise PoleError("digamma has poles at the non-positive integers")
    return _unwrap(psi(s_arr), s)


def gamma_ratio(theta):
    """Gamma(1/4 - i theta) / Gamma(1/4 + i theta), a pure phase"""
    theta = np.asarray(theta, dtype=float)
    value = np.exp(-2j * np.imag(loggamma(0.25 + 1j * theta)))
    return complex(value) if np.ndim(theta) == 0 else value


def a_d(r, kernel: Optional[ZetaKernel] = None):
    """zeta(2) / zeta(2 - 2r)"""
    r_arr = np.asarray(r, dtype=complex)
    return _unwrap(ZETA2 / np.asarray(zeta(2 - 2 * r_arr, kernel)), r)


@dataclass(frozen=True)
class EulerProductSpec:
    prime_limit: int = 10 ** 4

    @property
    def product_tail(self) -> float:
        """Crude bound on |log(product tail)|: sum_{p>P} 2/p^2 <= 2/(P log P)"""
        P = self.prime_limit
        return 2.0 / (P * math.log(P))

    @property
    def sum_tail(self) -> float:
        """Prime-counting heuristic for sum_{p>P} log p / p^2"""
        return 1.0 / self.prime_limit

    @property
    def tail_estimate(self) -> float:
        return max(self.product_tail, self.sum_tail)


@lru_cache(maxsize=4)
def _primes_for(limit: int):
    from arith import sieve_primes
    table = sieve_primes(limit)
    return table.primes.astype(float), table.logs


def _chunked_over_primes(r: np.ndarray, limit: int, term, reduce) -> np.ndarray:
    primes, logs = _primes_for(limit)
    rows = max(1, (1 << 22) // max(1, len(primes)))
    flat = r.ravel()
    parts = []
    for i in range(0, len(flat), rows):
        block = flat[i:i + rows][:, None]
        parts.append(reduce(term(block, primes[None, :], logs[None, :])))
    out = np.concatenate(parts) if parts else np.array([], dtype=complex)
    return out.reshape(r.shape)


def a_d_euler_product(r, spec: Optional[EulerProductSpec] = None):
    """prod_{p<=P} (1 - 1/((p+1) p^{1-2r}) - 1/(p+1)) / (1 - 1/p)"""
    spec = spec or EulerProductSpec()
    r_arr = np.asarray(r, dtype=complex)
    if np.any((2 - 2 * r_arr).real <= 1):
        raise DomainError("Euler product for A_D needs Re(2 - 2r) > 1")

    def log_factor(rb, p, logp):
        factor = (1 - np.exp(-(1 - 2 * rb) * logp) / (p + 1) - 1 / (p + 1)) / (1 - 1 / p)
        return np.log(factor)

    value = np.exp(_chunked_over_primes(r_arr, spec.prime_limit, log_factor, lambda m: m.sum(axis=1)))
    return _unwrap(value, r)


def a_d_prime(r, spec: Optional[EulerProductSpec] = None):
    """sum_{p<=P} log p / ((p+1)(p^{1+2r} - 1))"""
    spec = spec or EulerProductSpec()
    r_arr = np.asarray(r, dtype=complex)
    if np.any((1 + 2 * r_arr).real <= 0):
        raise DomainError("A_D' sum needs Re(1 + 2r) > 0")

    def term(rb, p, logp):
        return logp / ((p + 1) * (np.exp((1 + 2 * rb) * logp) - 1))

    value = _chunked_over_primes(r_arr, spec.prime_limit, term, lambda m: m.sum(axis=1))
    return _unwrap(value, r)


def lambda_series(N: int) -> float:
    """sum_{n<=N} Lambda(n)/n^2, the independent route to -zeta'(2)/zeta(2)"""
    from arith import sieve_primes
    table = sieve_primes(N)
    total = 0.0
    for p, logp in zip(table.primes.tolist(), table.logs.tolist()):
        pk = p
        while pk <= N:
            total += logp / pk ** 2
            pk *= p
    return total


def secondary_constant() -> float:
    """1 - psi(1/4) + 2 zeta'(2)/zeta(2) - 2 gamma + 2 log pi"""
    psi_quarter = digamma(0.25).real
    log_deriv_2 = (zeta_prime(2.0) / zeta(2.0)).real
    return 1 - psi_quarter + 2 * log_deriv_2 - 2 * EULER_GAMMA + 2 * math.log(math.pi)
