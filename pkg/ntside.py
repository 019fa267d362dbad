"""
Number-theory side of the one-level density: the explicit formula split into
its conductor term, the even prime-power sum and the odd prime-power sum.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from arith import (DiscriminantFamily, FamilyKind, FamilySpec, PrimeTable, character_vector,
                   enumerate_family, kronecker_prime_vector, sieve_primes)
from config import Config
from errors import DomainError
from quadrature import QuadratureSpec, integrate_even, oscillatory_tail_bound, sample_amplitude
from ratios import conductor_term
from specfun import EulerProductSpec, ZetaKernel, a_d_prime, zeta_log_deriv_reg
from testfn import TestFunction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NTBreakdown:
    conductor_term: float
    s_even_direct: float
    s_even_1: float
    s_even_2: float
    s_odd: float
    total: float

    @classmethod
    def zero(cls) -> 'NTBreakdown':
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_dict(self):
        return asdict(self)


class CharacterSums:
    """
    Sums over the family of chi_d(n), memoized per n. Each entry is written
    once; missing entries are computed in parallel and stored in input order.
    """

    def __init__(self, family: DiscriminantFamily, workers: Optional[int] = None):
        self.family = family
        self.workers = workers or Config.WORKERS
        self._sums: Dict[int, int] = {}

    def __getitem__(self, n: int) -> int:
        return self.fill([n])[int(n)]

    def __len__(self):
        return len(self._sums)

    def fill(self, ns: Iterable[int]) -> Dict[int, int]:
        ns = [int(n) for n in ns]
        missing = [n for n in dict.fromkeys(ns) if n not in self._sums]
        if missing:
            members = self.family.members
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                values = list(pool.map(lambda n: int(character_vector(members, n).sum(dtype=np.int64)), missing))
            self._sums.update(zip(missing, values))
        return {n: self._sums[n] for n in ns}

    def table_up_to(self, N: int) -> np.ndarray:
        """
        sums[n] for 0 <= n <= N. Rows chi_d(n) are built by smallest-prime-factor
        recursion chi(n) = chi(p) chi(n/p); prime rows are computed in parallel.
        """
        if N < 1:
            raise DomainError(f"character table needs N >= 1, got {N}")
        members = self.family.members
        spf = np.zeros(N + 1, dtype=np.int64)
        for p in range(2, N + 1):
            if spf[p] == 0:
                block = spf[p::p]
                block[block == 0] = p
        primes = [p for p in range(2, N + 1) if spf[p] == p]
        rows = np.zeros((N + 1, len(members)), dtype=np.int8)
        rows[1] = 1
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            for p, row in zip(primes, pool.map(lambda q: kronecker_prime_vector(members, q), primes)):
                rows[p] = row
        for n in range(4, N + 1):
            p = spf[n]
            if p != n:
                rows[n] = rows[p] * rows[n // p]
        sums = rows.sum(axis=1, dtype=np.int64)
        for n in range(1, N + 1):
            self._sums.setdefault(n, int(sums[n]))
        return sums


def _weights(f: TestFunction, L: float, table: PrimeTable, odd: bool):
    """(p, l, weight) arrays for the even (k = 2l) or odd (k = 2l + 1) prime powers with g_hat(k log p/L) != 0"""
    cutoff = math.exp(f.sigma * L)
    if odd:
        n, p, k, logp = table.prime_powers(cutoff)
        keep = k % 2 == 1
        n, p, k, logp = n[keep], p[keep], k[keep], logp[keep]
        ell = (k - 1) // 2
    else:
        n, p, ell, logp = table.prime_powers(math.sqrt(cutoff))
        k = 2 * ell
    weight = logp / (p.astype(float) ** (k / 2) * L) * f.g_hat(k * logp / L)
    nonzero = weight != 0
    return p[nonzero], ell[nonzero], weight[nonzero]


def _table_for(f: TestFunction, L: float, table: Optional[PrimeTable]) -> PrimeTable:
    bound = math.exp(f.sigma * L)
    if table is None:
        return sieve_primes(max(2, int(math.ceil(bound)) + 1))
    table.require(bound, f"prime powers below X^sigma = {bound:.6g}")
    return table


def contributing_prime_powers(f: TestFunction, X: float, odd: bool = False,
                              table: Optional[PrimeTable] = None) -> List[Tuple[int, int, float]]:
    """(p, l, weight) for every prime power the support of g_hat lets into the sum"""
    L = math.log(X)
    p, ell, weight = _weights(f, L, _table_for(f, L, table), odd)
    return list(zip(p.tolist(), ell.tolist(), weight.tolist()))


def s_even_1_prime_sum(f: TestFunction, X: float, table: Optional[PrimeTable] = None,
                       log_x: Optional[float] = None) -> float:
    """-(2/L) sum_n Lambda(n)/n g_hat(2 log n/L)"""
    L = log_x or math.log(X)
    _, _, weight = _weights(f, L, _table_for(f, L, table), odd=False)
    return -2 * math.fsum(weight.tolist())


def s_even_direct(family: DiscriminantFamily, f: TestFunction, table: Optional[PrimeTable] = None) -> float:
    L = family.log_x
    p, _, weight = _weights(f, L, _table_for(f, L, table), odd=False)
    squares = {q: float(np.mean(kronecker_prime_vector(family.members, q).astype(np.int64) ** 2))
               for q in np.unique(p).tolist()}
    return -2 * math.fsum(w * squares[q] for q, w in zip(p.tolist(), weight.tolist()))


def s_even_2_direct(family: DiscriminantFamily, f: TestFunction, table: Optional[PrimeTable] = None) -> float:
    L = family.log_x
    p, _, weight = _weights(f, L, _table_for(f, L, table), odd=False)
    counts = {q: family.divisible_count(q) for q in np.unique(p).tolist()}
    return 2 * math.fsum(w * counts[q] for q, w in zip(p.tolist(), weight.tolist())) / family.x_star


def s_odd(family: DiscriminantFamily, f: TestFunction, table: Optional[PrimeTable] = None,
          sums: Optional[CharacterSums] = None) -> float:
    L = family.log_x
    p, _, weight = _weights(f, L, _table_for(f, L, table), odd=True)
    sums = sums or CharacterSums(family)
    chi = sums.fill(np.unique(p).tolist())
    return -2 * math.fsum(w * chi[q] for q, w in zip(p.tolist(), weight.tolist())) / family.x_star


def _even_closed_kernel(kernel: Optional[ZetaKernel], spec: QuadratureSpec, L: float) -> ZetaKernel:
    return (kernel or Config.zeta_kernel()).for_height(4 * math.pi * spec.truncation_T / L * 1.01)


def s_even_1_closed(f: TestFunction, X: float, spec: Optional[QuadratureSpec] = None,
                    kernel: Optional[ZetaKernel] = None, log_x: Optional[float] = None) -> float:
    """
    -g(0)/2 + (2/L) PV integral of g(tau) zeta'/zeta(1 + 4 pi i tau/L).

    The -1/w pole pairs to zero against the even g, and the imaginary part of
    the regularized log-derivative is odd, so the PV is the integral of g
    against Re zld_reg.
    """
    spec = spec or Config.quadrature_spec()
    L = log_x or math.log(X)
    if f.is_zero:
        return 0.0
    if f.sigma >= 1:
        logger.warning("s_even_1_closed with sigma=%g >= 1: the half-residue constant is still -g(0)/2", f.sigma)
    beta = 4 * math.pi / L
    kernel = _even_closed_kernel(kernel, spec, L)

    def H(t):
        return np.real(zeta_log_deriv_reg(1j * beta * np.asarray(t, dtype=float), kernel))

    omega = min(beta * math.log(2), f.g_frequency) / 2
    result = integrate_even(lambda t: f.g(t) * H(t), spec,
                            tail_bound=oscillatory_tail_bound(f, sample_amplitude(H, spec.truncation_T), omega))
    return -f.g0 / 2 + 2 * result.real / L


def s_even_2_closed(f: TestFunction, X: float, spec: Optional[QuadratureSpec] = None,
                    euler: Optional[EulerProductSpec] = None, log_x: Optional[float] = None) -> float:
    """(2/L) integral of g(tau) A_D'(2 pi i tau/L)"""
    spec = spec or Config.quadrature_spec()
    L = log_x or math.log(X)
    if f.is_zero:
        return 0.0
    euler = euler or EulerProductSpec(Config.EULER_PRIME_LIMIT)
    beta = 4 * math.pi / L

    def H(t):
        return np.real(a_d_prime(2j * math.pi * np.asarray(t, dtype=float) / L, euler))

    omega = min(beta * math.log(2), f.g_frequency) / 2
    result = integrate_even(lambda t: f.g(t) * H(t), spec,
                            tail_bound=oscillatory_tail_bound(f, sample_amplitude(H, spec.truncation_T), omega))
    return 2 * result.real / L


def explicit_formula_total(family: DiscriminantFamily, f: TestFunction, table: Optional[PrimeTable] = None,
                           spec: Optional[QuadratureSpec] = None, sums: Optional[CharacterSums] = None,
                           conductor: Optional[float] = None) -> NTBreakdown:
    """conductor term + S_even + S_odd; `conductor` skips the quadrature when already known"""
    if family.x_star == 0:
        raise DomainError("the discriminant family is empty", remedy="raise X")
    if f.is_zero:
        return NTBreakdown.zero()
    L = family.log_x
    table = _table_for(f, L, table)
    if conductor is None:
        conductor = conductor_term(family, f, spec)
    even = s_even_direct(family, f, table)
    even_1 = s_even_1_prime_sum(f, family.spec.x_max, table, log_x=L)
    even_2 = s_even_2_direct(family, f, table)
    odd = s_odd(family, f, table, sums)
    breakdown = NTBreakdown(conductor_term=conductor, s_even_direct=even, s_even_1=even_1,
                            s_even_2=even_2, s_odd=odd, total=conductor + even + odd)
    logger.info("explicit formula X=%d: conductor=%.8f s_even=%.8f s_odd=%.8f total=%.8f",
                family.spec.x_max, conductor, even, odd, breakdown.total)
    return breakdown


def jutila_ratio(X: int, N: int, family: Optional[DiscriminantFamily] = None,
                 workers: Optional[int] = None) -> float:
    """sum over non-square 1 < n <= N of |sum_{d <= X} chi_d(n)|^2, over N X log^10 N"""
    if N < 2:
        raise DomainError(f"jutila ratio needs N >= 2, got {N}")
    family = family or enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, X), workers)
    sums = CharacterSums(family, workers).table_up_to(N).astype(float)
    n = np.arange(N + 1)
    non_square = np.array([math.isqrt(k) ** 2 != k for k in range(N + 1)])
    keep = (n > 1) & non_square
    ratio = float(np.sum(sums[keep] ** 2)) / (N * X * math.log(N) ** 10)
    logger.info("jutila ratio X=%d N=%d: %.6g", X, N, ratio)
    return ratio
