"""
Poisson-summation lab for the odd prime sums.

Gauss-type sums G_m(k), the truncated Mobius split M_Z + R_Z of mu(d)^2, the
smoothing family Phi supported on (1, 2), its transforms, and a desk-scale
comparison of the direct and Poisson-expanded smoothed sums.
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
import sympy

from arith import kronecker, kronecker_prime_vector, mobius_table, sieve_primes, squarefree_mask
from config import Config
from errors import DomainError, TruncationError
from testfn import TestFunction

logger = logging.getLogger(__name__)

_EDGE = 0.01
_MAX_DERIVATIVE = 4
_EDGE_NODES = 32
_ETA_CHUNK = 1 << 14
_LAW_TOL = 1e-9


def _normalizer(k: int) -> complex:
    """(1+i)/2 + (-1|k)(1-i)/2: 1 for k = 1 mod 4, i for k = 3 mod 4"""
    sign = 1 if k % 4 == 1 else -1
    return (1 + 1j) / 2 + sign * (1 - 1j) / 2


def _symbol_row(k: int) -> np.ndarray:
    return np.array([kronecker(a, k) for a in range(k)], dtype=float)


def _gauss_row(k: int) -> np.ndarray:
    """G_m(k) for m = 0..k-1; the complete sum is k * ifft of the symbol row"""
    return k * np.fft.ifft(_symbol_row(k)) / _normalizer(k)


def gauss_sum(m: int, k: int) -> complex:
    if k < 1 or k % 2 == 0:
        raise DomainError(f"gauss_sum needs an odd positive modulus, got k={k}")
    a = np.arange(k)
    total = np.sum(_symbol_row(k) * np.exp(2j * math.pi * a * (m % k) / k))
    return complex(total / _normalizer(k))


@dataclass(frozen=True)
class LawReport:
    checked: int
    violations: List[Tuple[int, int, str, complex]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True, eq=False)
class GaussSumTable:
    k_max: int
    m_max: int
    values: Dict[int, np.ndarray]

    def __getitem__(self, key) -> complex:
        m, k = key
        if k not in self.values:
            raise DomainError(f"modulus {k} is not in the table (odd k <= {self.k_max})")
        return complex(self.values[k][m % k])

    def check_laws(self) -> LawReport:
        """G_m(p) = 0 for p | m, sqrt(p) for square m, and |G_m(p)| = sqrt(p) otherwise"""
        violations = []
        checked = 0
        m = np.arange(1, self.m_max + 1)
        square = np.array([math.isqrt(v) ** 2 == v for v in m.tolist()])
        primes = sieve_primes(max(2, self.k_max)).primes.tolist() if self.k_max >= 2 else []
        for p in primes:
            if p == 2:
                continue
            g = self.values[p][m % p]
            root = math.sqrt(p)
            divisible = m % p == 0
            bad_zero = divisible & (np.abs(g) > _LAW_TOL)
            bad_square = ~divisible & square & (np.abs(g - root) > _LAW_TOL)
            bad_modulus = ~divisible & (np.abs(np.abs(g) - root) > _LAW_TOL)
            for law, mask in (('zero', bad_zero), ('square', bad_square), ('modulus', bad_modulus)):
                violations.extend((int(mi), p, law, complex(gi)) for mi, gi in zip(m[mask], g[mask]))
            checked += len(m)
        return LawReport(checked=checked, violations=violations)

    def write_csv(self, stream):
        writer = csv.writer(stream)
        writer.writerow(['m', 'k', 'real', 'imag'])
        for k in sorted(self.values):
            row = self.values[k]
            for m in range(1, self.m_max + 1):
                g = row[m % k]
                writer.writerow([m, k, f"{g.real:.12g}", f"{g.imag:.12g}"])


def gauss_sum_table(k_max: int, m_max: int, workers: Optional[int] = None) -> GaussSumTable:
    if k_max < 1 or m_max < 1:
        raise DomainError("gauss_sum_table needs k_max >= 1 and m_max >= 1")
    moduli = list(range(1, k_max + 1, 2))
    with ThreadPoolExecutor(max_workers=workers or Config.WORKERS) as pool:
        rows = list(pool.map(_gauss_row, moduli))
    logger.info("gauss sum table: %d odd moduli up to %d, m <= %d", len(moduli), k_max, m_max)
    return GaussSumTable(k_max=k_max, m_max=m_max, values=dict(zip(moduli, rows)))


def mz_rz(d: int, Z: int) -> Tuple[int, int]:
    """(sum of mu(l) over l^2 | d with l <= Z, same over l > Z)"""
    if d < 1:
        raise DomainError(f"mz_rz needs d >= 1, got {d}")
    root = math.isqrt(d)
    mu = mobius_table(max(1, root)).mu
    M = R = 0
    for l in range(1, root + 1):
        if d % (l * l) == 0 and mu[l]:
            if l <= Z:
                M += int(mu[l])
            else:
                R += int(mu[l])
    return M, R


def mz_rz_table(limit: int, Z: int) -> Tuple[np.ndarray, np.ndarray]:
    """M_Z(d), R_Z(d) for 0 <= d <= limit (index 0 unused)"""
    mu = mobius_table(max(1, math.isqrt(limit))).mu
    M = np.zeros(limit + 1, dtype=np.int64)
    R = np.zeros(limit + 1, dtype=np.int64)
    for l in range(1, math.isqrt(limit) + 1):
        if mu[l]:
            target = M if l <= Z else R
            target[l * l::l * l] += int(mu[l])
    return M, R


@lru_cache(maxsize=2)
def _step_derivatives(j_max: int):
    """Lambdified derivatives of the smooth step S(x) = 1/(1 + exp(1/x - 1/(1-x)))"""
    x = sympy.symbols('x')
    expr = 1 / (1 + sympy.exp(1 / x - 1 / (1 - x)))
    funcs = []
    for _ in range(j_max + 1):
        funcs.append(sympy.lambdify(x, expr, 'numpy'))
        expr = sympy.diff(expr, x)
    return tuple(funcs)


def _step(j: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    if j == 0:
        out[x >= 1 - _EDGE] = 1.0
    inside = (x > _EDGE) & (x < 1 - _EDGE)
    if np.any(inside):
        with np.errstate(over='ignore', invalid='ignore'):
            out[inside] = _step_derivatives(_MAX_DERIVATIVE)[j](x[inside])
    return out


@lru_cache(maxsize=8)
def _edge_rule(panels: int):
    """Gauss-Legendre nodes on [0, 1] weighted by S'(x)"""
    x, w = np.polynomial.legendre.leggauss(_EDGE_NODES)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    nodes = (mid + half * x).ravel()
    weights = (half * w).ravel()
    return nodes, weights * _step(1, nodes)


@dataclass(frozen=True)
class SmoothingPhi:
    """
    Phi(t) = S((t-1)U) on [1, 1+1/U], 1 on the plateau, S((2-t)U) on [2-1/U, 2],
    0 elsewhere, so that |Phi^(j)| <= c_j U^j with c_j = max |S^(j)|.
    """
    U: float
    j_max: int = 2

    def __call__(self, t):
        return self.derivative(t, 0)

    def derivative(self, t, j: int = 0):
        if not 0 <= j <= self.j_max:
            raise DomainError(f"derivative order {j} outside 0..{self.j_max}")
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        U = self.U
        out = np.zeros_like(t_arr)
        rising = (t_arr > 1) & (t_arr < 1 + 1 / U)
        falling = (t_arr > 2 - 1 / U) & (t_arr < 2)
        out[rising] = U ** j * _step(j, (t_arr[rising] - 1) * U)
        out[falling] = (-U) ** j * _step(j, (2 - t_arr[falling]) * U)
        if j == 0:
            out[(t_arr >= 1 + 1 / U) & (t_arr <= 2 - 1 / U)] = 1.0
        return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))

    @property
    def mass(self) -> float:
        return 1 - 1 / self.U

    @cached_property
    def derivative_constants(self) -> Dict[int, float]:
        """Measured max |Phi^(j)| / U^j over the rising edge"""
        t = np.linspace(1, 1 + 1 / self.U, 4001)
        return {j: float(np.max(np.abs(self.derivative(t, j)))) / self.U ** j
                for j in range(1, self.j_max + 1)}


def make_phi(U: float, j_max: int = 2) -> SmoothingPhi:
    if U < 4:
        raise DomainError(f"smoothing needs U >= 4, got {U}")
    if not 0 <= j_max <= _MAX_DERIVATIVE:
        raise DomainError(f"j_max must be in 0..{_MAX_DERIVATIVE}, got {j_max}")
    return SmoothingPhi(U=float(U), j_max=int(j_max))


def _edge_transform(eta: np.ndarray) -> np.ndarray:
    """integral over [0, 1] of S'(x) exp(-2 pi i eta x)"""
    panels = max(4, int(math.ceil(float(np.max(np.abs(eta), initial=0.0)) / 4)))
    nodes, weights = _edge_rule(panels)
    out = np.empty(eta.shape, dtype=complex)
    for i in range(0, len(eta), _ETA_CHUNK):
        block = eta[i:i + _ETA_CHUNK]
        out[i:i + _ETA_CHUNK] = np.exp(-2j * math.pi * np.outer(block, nodes)) @ weights
    return out


def phi_hat(phi: SmoothingPhi, xi):
    """
    Fourier transform of Phi, by parts from Phi', whose two edges are copies
    of S' shifted to t = 1 and reflected at t = 2.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
    out = np.empty(xi_arr.shape, dtype=complex)
    zero = xi_arr == 0
    out[zero] = phi.mass
    nz = xi_arr[~zero]
    if nz.size:
        s = _edge_transform(nz / phi.U)
        out[~zero] = (np.exp(-2j * math.pi * nz) * s - np.exp(-4j * math.pi * nz) * np.conj(s)) / (2j * math.pi * nz)
    return complex(out[0]) if np.ndim(xi) == 0 else out.reshape(np.shape(xi))


def phi_tilde(phi: SmoothingPhi, xi):
    """(1+i)/2 Phi_hat(xi) + (1-i)/2 Phi_hat(-xi); real because Phi is real"""
    xi_arr = np.asarray(xi, dtype=float)
    value = (1 + 1j) / 2 * np.asarray(phi_hat(phi, xi_arr)) + (1 - 1j) / 2 * np.asarray(phi_hat(phi, -xi_arr))
    return complex(value) if np.ndim(xi) == 0 else value


def phi_hat_decay_slope(phi: SmoothingPhi, lo: float, hi: float, points: int = 12) -> float:
    """log-log slope of the envelope of |Phi_hat| (max over unit windows) on [lo, hi]"""
    centers = np.geomspace(lo, hi, points)
    window = centers[:, None] + np.linspace(0, 1, 17)[None, :]
    envelope = np.abs(phi_hat(phi, window)).max(axis=1)
    keep = envelope > 0
    return float(np.polyfit(np.log(centers[keep]), np.log(envelope[keep]), 1)[0])


@dataclass(frozen=True)
class SmoothedSumRecord:
    X: int
    Y: int
    Z: int
    U: float
    s_direct: float
    s_smoothed: float
    s_m_direct: float
    s_m_poisson: float
    smoothing_gap: float
    poisson_gap: float
    poisson_budget: float
    edge_mass: float
    xi_max: float

    def as_dict(self):
        return asdict(self)


def _prime_weights(f: TestFunction, X: int, Y: int):
    """odd primes p < Y with weight log p/sqrt(p) g_hat(log p/log X)"""
    primes = sieve_primes(max(2, Y)).primes
    primes = primes[(primes > 2) & (primes < Y)]
    logp = np.log(primes.astype(float))
    return primes, logp / np.sqrt(primes) * f.g_hat(logp / math.log(X))


def _poisson_block(phi: SmoothingPhi, gauss_row: np.ndarray, p: int, c: float, xi_max: float):
    """sum over k != 0 of (-1)^k G_k(p) Phi~(k c), and the absolute mass of its last quarter in k"""
    K = int(math.ceil(xi_max / c))
    k = np.arange(1, K + 1)
    hat = phi_hat(phi, k * c)
    # Phi~(xi) = Re Phi_hat - Im Phi_hat; Phi~(-xi) = Re Phi_hat + Im Phi_hat
    plus = hat.real - hat.imag
    minus = hat.real + hat.imag
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    terms = sign * (gauss_row[k % p] * plus + gauss_row[(-k) % p] * minus)
    outer = k > (3 * K) // 4
    return terms.sum(), float(np.abs(terms[outer]).sum())


def smoothed_sum_compare(X: int, Y: int, Z: int, U: float, f: TestFunction,
                         xi_max: Optional[float] = None, tol: Optional[float] = None) -> SmoothedSumRecord:
    """
    Direct sums over odd X < d < 2X of the prime sum P(d) = sum_p w_p chi_8d(p),
    weighted by mu(d)^2, mu(d)^2 Phi(d/X) and M_Z(d) Phi(d/X), against the
    Poisson expansion of the M_Z part truncated at frequency xi_max.

    The m-tail budget is the absolute mass of the last quarter of every
    truncated frequency block; it must stay below tol * max(1, |S_M|).
    """
    if X < 1 or Y < 3 or Z < 1:
        raise DomainError("smoothed_sum_compare needs X >= 1, Y >= 3, Z >= 1")
    phi = make_phi(U)
    xi_max = float(xi_max or 16 * phi.U)
    tol = Config.POISSON_TOL if tol is None else tol

    primes, weights = _prime_weights(f, X, Y)
    d = np.arange(X + 1, 2 * X, dtype=np.int64)
    d = d[d % 2 == 1]
    prime_sum = np.zeros(len(d))
    for p, w in zip(primes.tolist(), weights.tolist()):
        if w:
            prime_sum += w * kronecker_prime_vector(8 * d, p)

    squarefree = squarefree_mask(X + 1, 2 * X)[(d - X - 1)].astype(float)
    smooth = phi(d / X)
    M, _ = mz_rz_table(2 * X, Z)
    s_direct = float(np.sum(squarefree * prime_sum))
    s_smoothed = float(np.sum(squarefree * smooth * prime_sum))
    s_m_direct = float(np.sum(M[d] * smooth * prime_sum))
    edge_mass = float(np.sum(squarefree * (1 - smooth) * np.abs(prime_sum)))

    mu = mobius_table(max(1, Z)).mu
    poisson = 0.0
    budget = 0.0
    for p, w in zip(primes.tolist(), weights.tolist()):
        if not w:
            continue
        row = _gauss_row(p)
        for alpha in range(1, Z + 1, 2):
            if not mu[alpha] or alpha % p == 0 or alpha * alpha >= 2 * X:
                continue
            c = X / (2 * alpha * alpha * p)
            block, outer = _poisson_block(phi, row, p, c, xi_max)
            scale = w * int(mu[alpha]) * c
            poisson += scale * block
            budget += abs(scale) * outer
    s_m_poisson = float(np.real(poisson))

    allowed = tol * max(1.0, abs(s_m_direct))
    if budget > allowed:
        raise TruncationError(
            f"Poisson truncation at xi_max={xi_max:g} leaves a tail estimate of {budget:.3g} > {allowed:.3g}",
            remedy=f"rerun with xi_max >= {2 * xi_max:g}")
    record = SmoothedSumRecord(
        X=X, Y=Y, Z=Z, U=phi.U,
        s_direct=s_direct, s_smoothed=s_smoothed, s_m_direct=s_m_direct, s_m_poisson=s_m_poisson,
        smoothing_gap=abs(s_direct - s_smoothed), poisson_gap=abs(s_m_direct - s_m_poisson),
        poisson_budget=budget, edge_mass=edge_mass, xi_max=xi_max,
    )
    logger.info("smoothed sums X=%d Y=%d Z=%d U=%g: poisson gap %.3g (budget %.3g), smoothing gap %.3g",
                X, Y, Z, phi.U, record.poisson_gap, budget, record.smoothing_gap)
    return record


def _ratio(num: float, den: float) -> float:
    return num / den if den else math.nan


def smoothing_halving(first: SmoothedSumRecord, doubled: SmoothedSumRecord) -> Dict[str, float]:
    """
    Compare runs at U and 2U. edge_mass is expected to halve; the signed
    smoothing gap is a character sum over the two edge strips that cancels,
    so its ratio is reported as is.
    """
    if (first.X, first.Y, first.Z) != (doubled.X, doubled.Y, doubled.Z):
        raise DomainError("halving compares runs at the same X, Y, Z")
    halving = {
        'edge_mass_ratio': _ratio(doubled.edge_mass, first.edge_mass),
        'smoothing_gap_ratio': _ratio(doubled.smoothing_gap, first.smoothing_gap),
    }
    if not 0.35 <= halving['edge_mass_ratio'] <= 0.65:
        logger.warning("edge mass ratio %.3f under U=%g -> %g is outside 0.5 +- 30%%",
                       halving['edge_mass_ratio'], first.U, doubled.U)
    return halving
