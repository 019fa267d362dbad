"""
Integer substrate: prime and Möbius sieves, discriminant families, Kronecker
symbols, and the counting / exponential-sum checks for those families.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from sympy import factorint

from config import Config
from errors import CapacityError, DomainError

logger = logging.getLogger(__name__)


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p::p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def _segment_size(memory_budget: Optional[int]) -> int:
    return max(1 << 16, int(memory_budget or Config.SIEVE_MEMORY_BUDGET))


@dataclass(frozen=True, eq=False)
class PrimeTable:
    limit: int
    primes: np.ndarray
    logs: np.ndarray

    def __len__(self):
        return len(self.primes)

    def up_to(self, bound: float) -> np.ndarray:
        """Primes p <= bound"""
        return self.primes[:np.searchsorted(self.primes, bound, side='right')]

    def require(self, bound: float, what: str = 'prime sum'):
        if bound > self.limit:
            raise CapacityError(
                f"prime table up to {self.limit} is too small for {what} (needs {bound:.6g})",
                remedy=f"raise --prime-limit to at least {int(math.ceil(bound))}")

    def prime_powers(self, bound: float):
        """
        Prime powers n = p^l < bound.
        Returns: (n, p, l, log p) as parallel arrays ordered by p then l
        """
        self.require(bound, 'prime powers')
        ns, ps, ls = [], [], []
        for p in self.primes[self.primes < bound].tolist():
            n, l = p, 1
            while n < bound:
                ns.append(n)
                ps.append(p)
                ls.append(l)
                n *= p
                l += 1
        ps = np.asarray(ps, dtype=np.int64)
        return (np.asarray(ns, dtype=np.int64), ps, np.asarray(ls, dtype=np.int64),
                np.log(ps.astype(float)))


def sieve_primes(limit: int, memory_budget: Optional[int] = None) -> PrimeTable:
    """Segmented sieve of Eratosthenes; segment length follows the memory budget"""
    if limit < 2:
        raise DomainError(f"sieve limit must be >= 2, got {limit}")
    if limit > Config.SIEVE_MAX_LIMIT:
        raise CapacityError(f"sieve limit {limit} exceeds the configured maximum {Config.SIEVE_MAX_LIMIT}",
                            remedy="raise SIEVE_MAX_LIMIT or lower --prime-limit")
    base = _simple_sieve(math.isqrt(limit) + 1)
    span = _segment_size(memory_budget)
    chunks = []
    low = 2
    while low <= limit:
        high = min(low + span, limit + 1)
        mask = np.ones(high - low, dtype=bool)
        for p in base.tolist():
            p2 = p * p
            if p2 >= high:
                break
            start = max(p2, ((low + p - 1) // p) * p)
            mask[start - low::p] = False
        chunks.append(low + np.flatnonzero(mask).astype(np.int64))
        low = high
    primes = np.concatenate(chunks) if chunks else np.array([], dtype=np.int64)
    logger.debug("sieved %d primes up to %d", len(primes), limit)
    return PrimeTable(limit=int(limit), primes=primes, logs=np.log(primes.astype(float)))


@dataclass(frozen=True, eq=False)
class MobiusTable:
    limit: int
    mu: np.ndarray

    def __getitem__(self, n):
        return self.mu[n]


def mobius_table(limit: int, memory_budget: Optional[int] = None) -> MobiusTable:
    if limit < 1:
        raise DomainError(f"mobius table limit must be >= 1, got {limit}")
    if limit + 1 > _segment_size(memory_budget) * 16:
        raise CapacityError(f"mobius table up to {limit} exceeds the memory budget",
                            remedy="raise SIEVE_MEMORY_BUDGET")
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in _simple_sieve(limit).tolist():
        mu[p::p] *= -1
        if p * p <= limit:
            mu[p * p::p * p] = 0
    return MobiusTable(limit=int(limit), mu=mu)


def squarefree_mask(low: int, high: int, base_primes: Optional[np.ndarray] = None) -> np.ndarray:
    """mask[i] is True iff low + i is square-free, for low >= 1"""
    if base_primes is None:
        base_primes = _simple_sieve(math.isqrt(high) + 1)
    mask = np.ones(high - low, dtype=bool)
    for p in base_primes.tolist():
        p2 = p * p
        if p2 >= high:
            break
        start = ((low + p2 - 1) // p2) * p2
        mask[start - low::p2] = False
    return mask


class FamilyKind(Enum):
    EVEN_FUNDAMENTAL = 'even'
    EIGHT_D = '8d'

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise DomainError(f"unknown family kind '{name}'", remedy="use 'even' or '8d'")


@dataclass(frozen=True)
class FamilySpec:
    kind: FamilyKind
    x_max: int
    a_char: int = 0

    def __post_init__(self):
        if self.x_max < 1:
            raise DomainError(f"x_max must be >= 1, got {self.x_max}")
        if self.a_char != 0:
            raise DomainError("only even families (a(chi_d) = 0) are supported")


@dataclass(frozen=True, eq=False)
class DiscriminantFamily:
    spec: FamilySpec
    members: np.ndarray

    @property
    def x_star(self) -> int:
        return int(len(self.members))

    @property
    def log_x(self) -> float:
        """log of the conductor bound of the family"""
        if self.spec.kind is FamilyKind.EIGHT_D:
            return math.log(8 * self.spec.x_max)
        return math.log(self.spec.x_max)

    @cached_property
    def log_d_over_pi(self) -> np.ndarray:
        return np.log(self.members.astype(float) / math.pi)

    @classmethod
    def from_members(cls, members, x_max: Optional[int] = None, kind=FamilyKind.EVEN_FUNDAMENTAL):
        """Ad-hoc family, e.g. the single discriminant {5} used in hand checks"""
        members = np.asarray(sorted(members), dtype=np.int64)
        return cls(FamilySpec(kind, int(x_max or members.max())), members)

    def divisible_count(self, p: int) -> int:
        return int(np.count_nonzero(self.members % p == 0))


def _family_block(kind: FamilyKind, x_max: int, low: int, high: int, base: np.ndarray) -> np.ndarray:
    values = low + np.flatnonzero(squarefree_mask(low, high, base)).astype(np.int64)
    if kind is FamilyKind.EIGHT_D:
        return 8 * values[values % 2 == 1]
    r = values % 4
    odd_part = values[(r == 1) & (values > 1)]
    quarter = values[((r == 2) | (r == 3)) & (values <= x_max // 4)]
    return np.concatenate([odd_part, 4 * quarter])


def enumerate_family(spec: FamilySpec, workers: Optional[int] = None,
                     memory_budget: Optional[int] = None) -> DiscriminantFamily:
    """Enumerate the family by value blocks; blocks are concatenated in order and sorted"""
    x_max = spec.x_max
    base = _simple_sieve(math.isqrt(x_max) + 1)
    span = _segment_size(memory_budget)
    bounds = [(lo, min(lo + span, x_max + 1)) for lo in range(1, x_max + 1, span)]
    with ThreadPoolExecutor(max_workers=workers or Config.WORKERS) as pool:
        blocks = list(pool.map(lambda b: _family_block(spec.kind, x_max, b[0], b[1], base), bounds))
    members = np.sort(np.concatenate(blocks)) if blocks else np.array([], dtype=np.int64)
    logger.info("enumerated %s family up to %d: X* = %d", spec.kind.value, x_max, len(members))
    return DiscriminantFamily(spec=spec, members=members)


_TAB2 = (0, 1, 0, -1, 0, -1, 0, 1)


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) by binary reciprocity reduction"""
    a, b = int(d), int(n)
    if b == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and b % 2 == 0:
        return 0
    v = 0
    while b % 2 == 0:
        v += 1
        b //= 2
    k = 1 if v % 2 == 0 else _TAB2[a & 7]
    if b < 0:
        b = -b
        if a < 0:
            k = -k
    while True:
        if a == 0:
            return k if b == 1 else 0
        v = 0
        while a % 2 == 0:
            v += 1
            a //= 2
        if v % 2 == 1:
            k *= _TAB2[b & 7]
        if a % 4 == 3 and b % 4 == 3:
            k = -k
        r = abs(a)
        a = b % r
        b = r


def _powmod(base: np.ndarray, exponent: int, modulus: int) -> np.ndarray:
    result = np.ones_like(base)
    base = base % modulus
    while exponent:
        if exponent & 1:
            result = (result * base) % modulus
        base = (base * base) % modulus
        exponent >>= 1
    return result


def kronecker_prime_vector(members: np.ndarray, p: int) -> np.ndarray:
    """chi_d(p) for every d in members (p prime), as int8"""
    members = np.asarray(members, dtype=np.int64)
    if p == 2:
        r = members % 8
        out = np.zeros(len(members), dtype=np.int8)
        out[(r == 1) | (r == 7)] = 1
        out[(r == 3) | (r == 5)] = -1
        return out
    if p > 3_000_000_000:
        raise DomainError(f"vectorized Legendre symbol needs p < 3e9, got {p}")
    e = _powmod(members % p, (p - 1) // 2, p)
    out = np.zeros(len(members), dtype=np.int8)
    out[e == 1] = 1
    out[e == p - 1] = -1
    return out


def character_vector(members: np.ndarray, n: int) -> np.ndarray:
    """chi_d(n) for every d in members, by complete multiplicativity"""
    out = np.ones(len(members), dtype=np.int8)
    for p, e in factorint(int(n)).items():
        chi = kronecker_prime_vector(members, int(p))
        out *= chi if e % 2 else chi * chi
    return out


@dataclass(frozen=True)
class CountingCheck:
    X: int
    x_star: int
    predicted: float
    deviation: float

    @property
    def normalized(self) -> float:
        return self.deviation / math.sqrt(self.X)


@dataclass(frozen=True)
class DivisibilityCheck:
    X: int
    p: int
    count: int
    predicted: float
    deviation: float

    @property
    def normalized(self) -> float:
        return self.deviation / math.sqrt(self.X)


def check_counting(X: int, family: Optional[DiscriminantFamily] = None) -> CountingCheck:
    if X < 10:
        raise DomainError(f"counting check needs X >= 10, got {X}")
    family = family or enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, X))
    predicted = 3 * X / math.pi ** 2
    return CountingCheck(X=X, x_star=family.x_star, predicted=predicted,
                         deviation=abs(family.x_star - predicted))


def check_divisible_count(X: int, p: int, family: Optional[DiscriminantFamily] = None) -> DivisibilityCheck:
    if p * p > X:
        raise DomainError(f"divisibility count needs p <= sqrt(X); p={p}, X={X}")
    family = family or enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, X))
    count = family.divisible_count(p)
    predicted = family.x_star / (p + 1)
    return DivisibilityCheck(X=X, p=p, count=count, predicted=predicted, deviation=abs(count - predicted))


def disc_exp_sum(family: DiscriminantFamily, z, exact: bool = True, chunk: int = 1 << 22):
    """
    Sum over the family of exp(-2 pi i z log(d/pi) / log X).

    Exact mode forms the literal d-sum. Asymptotic mode returns the main term
    X* exp(-2 pi i (1 - log(pi)/log X) z) / (1 - 2 pi i z / log X), valid for
    Im(z) = -w log X / (2 pi) with w = 0 or w >= 1/2.
    """
    L = family.log_x
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if exact:
        u = family.log_d_over_pi
        out = np.empty(z_arr.shape, dtype=complex)
        rows = max(1, chunk // max(1, len(u)))
        for i in range(0, len(z_arr), rows):
            block = z_arr[i:i + rows]
            out[i:i + rows] = np.exp(-2j * math.pi * np.outer(block, u) / L).sum(axis=1)
    else:
        w = -z_arr.imag * 2 * math.pi / L
        bad = (w > 1e-12) & (w < 0.5 - 1e-12) | (w < -1e-12)
        if np.any(bad):
            raise DomainError("asymptotic d-sum needs w = 0 or w >= 1/2",
                              remedy="use exact mode for this shift")
        denom = 1 - 2j * math.pi * z_arr / L
        if np.any(np.abs(denom) == 0):
            raise DomainError("asymptotic d-sum evaluated at its pole (w = 1, tau = 0)")
        out = family.x_star * np.exp(-2j * math.pi * (1 - math.log(math.pi) / L) * z_arr) / denom
    return out[0] if np.ndim(z) == 0 else out
