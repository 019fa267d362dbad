"""
Gauss-Legendre panel quadrature for even integrands on the real line.

Nodes live on (0, T] and never touch tau = 0. Tails beyond T are handled by
caller-supplied models: `tail_value` adds the non-oscillatory part analytically
and `tail_bound` estimates what is left.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from errors import DomainError, StructureError, TruncationError

logger = logging.getLogger(__name__)

TailFn = Callable[[float], float]

_SAMPLED_PANELS = 256


@dataclass(frozen=True)
class QuadratureSpec:
    truncation_T: float = 2000.0
    panels: int = 2000
    nodes_per_panel: int = 16
    abs_tol: float = 1e-5
    small_tau_radius: float = 1e-3
    workers: int = 1

    def __post_init__(self):
        if self.truncation_T <= 0 or self.panels < 1:
            raise DomainError("quadrature needs T > 0 and at least one panel")
        if self.nodes_per_panel < 4:
            raise DomainError("quadrature needs at least 4 nodes per panel")

    def doubled(self) -> 'QuadratureSpec':
        return replace(self, panels=2 * self.panels)

    def extended(self) -> 'QuadratureSpec':
        """Twice the truncation radius at the same panel width"""
        return replace(self, truncation_T=2 * self.truncation_T, panels=2 * self.panels)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    # |n-point rule - (n-2)-point rule|, same panels
    discretization_error: float
    tail_error: float

    @property
    def error_budget(self) -> float:
        return self.discretization_error + self.tail_error

    @property
    def real(self) -> float:
        return float(np.real(self.value))


@lru_cache(maxsize=32)
def _panel_nodes(T: float, panels: int, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(0.0, T, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return mid + half * x[None, :], half * w[None, :]


def _evaluate(h, tau: np.ndarray, workers: int) -> np.ndarray:
    flat = tau.ravel()
    if workers <= 1 or len(flat) < 4096:
        values = np.asarray(h(flat), dtype=complex)
    else:
        chunks = np.array_split(flat, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.concatenate([np.asarray(v, dtype=complex) for v in pool.map(h, chunks)])
    return values.reshape(tau.shape)


def _lower_order_estimate(h, spec: QuadratureSpec, panel_sums: np.ndarray) -> float:
    """|rule_n - rule_{n-2}| on a fixed sample of panels, scaled to all panels"""
    stride = max(1, spec.panels // _SAMPLED_PANELS)
    sample = np.arange(0, spec.panels, stride)
    tau, w = _panel_nodes(spec.truncation_T, spec.panels, spec.nodes_per_panel - 2)
    lower = (w[sample] * _evaluate(h, tau[sample], spec.workers)).sum(axis=1)
    return float(2 * stride * np.abs(panel_sums[sample] - lower).sum())


def integrate_even(h, spec: QuadratureSpec, tail_bound: Optional[TailFn] = None,
                   tail_value: Optional[TailFn] = None) -> QuadratureResult:
    """
    Integral of an even integrand over the real line as 2 * (panel sums over (0, T]).

    h takes an array of tau > 0 and returns an array. Raises TruncationError when
    the tail estimate at T exceeds spec.abs_tol. The discretization error is the
    gap to the (nodes_per_panel - 2)-point rule on the same panels; refining the
    panels themselves is QuadratureSpec.doubled().
    """
    T = spec.truncation_T
    tail = float(tail_bound(T)) if tail_bound else 0.0
    if tail > spec.abs_tol:
        raise TruncationError(
            f"tail estimate {tail:.3g} at T={T:g} exceeds abs_tol={spec.abs_tol:g}",
            remedy="raise quad.T (and quad.panels with it) or loosen quad.tol")
    tau, w = _panel_nodes(T, spec.panels, spec.nodes_per_panel)
    panel_sums = (w * _evaluate(h, tau, spec.workers)).sum(axis=1)
    value = 2 * panel_sums.sum()
    if tail_value:
        value += tail_value(T)
    disc = _lower_order_estimate(h, spec, panel_sums)
    logger.debug("integrate_even: T=%g panels=%d value=%s disc=%.2e tail=%.2e",
                 T, spec.panels, value, disc, tail)
    return QuadratureResult(value=complex(value), discretization_error=disc, tail_error=tail)


def principal_value_even(h, spec: QuadratureSpec, tail_bound: Optional[TailFn] = None,
                         tail_value: Optional[TailFn] = None,
                         conjugate_symmetric: bool = False) -> QuadratureResult:
    """
    PV of an integrand with at most a c/tau singularity, by pairing h(tau) + h(-tau).

    With conjugate_symmetric the pair is formed as 2 Re h(tau), which saves the
    evaluation at -tau when h(-tau) = conj h(tau).
    """
    if conjugate_symmetric:
        def paired(t):
            return 2 * np.real(h(t))
    else:
        def paired(t):
            return np.asarray(h(t), dtype=complex) + np.asarray(h(-t), dtype=complex)

    tau, _ = _panel_nodes(spec.truncation_T, spec.panels, spec.nodes_per_panel)
    first = float(tau[0, 0])
    near_zero = np.array([first, first / 10, first / 100])
    values = np.abs(np.asarray(paired(near_zero), dtype=complex))
    if values[2] > 5 * values[1] > 25 * max(values[0], 1e-300):
        raise StructureError("paired integrand grows like 1/tau at 0; the singularity is not removable")

    return integrate_even(lambda t: np.asarray(paired(t), dtype=complex) / 2, spec, tail_bound, tail_value)


def integrate_interval(fn, a: float, b: float, breakpoints: Sequence[float] = (),
                       nodes: int = 32, panels: int = 1) -> float:
    """Composite Gauss-Legendre on [a, b], split at the given interior breakpoints"""
    cuts = sorted({a, b, *(x for x in breakpoints if a < x < b)})
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        edges = np.linspace(lo, hi, panels + 1)
        half = np.diff(edges)[:, None] / 2
        mid = (edges[:-1] + edges[1:])[:, None] / 2
        total += (half * w * fn(mid + half * x)).sum()
    return total


def oscillatory_tail_bound(f, amplitude: float, omega: float) -> TailFn:
    """
    Tail of g(tau) * H(tau) for a zero-mean H of size `amplitude` oscillating at
    frequency >= omega: second mean value theorem on both half-lines.
    """
    if omega <= 0:
        raise DomainError("oscillatory tail needs a positive frequency")
    return lambda T: 4 * amplitude * f.envelope(T) / omega


def decaying_tail_bound(f, amplitude: float, power: float) -> TailFn:
    """Tail of g(tau) * H(tau) with |H(tau)| <= amplitude / tau^power"""
    return lambda T: 2 * amplitude * f.envelope_mass(T) / T ** power


def sample_amplitude(H, T: float, points: int = 64) -> float:
    """sup |H| sampled over [T/2, T], used to size oscillatory tail bounds"""
    grid = np.linspace(T / 2, T, points)
    return float(np.max(np.abs(np.asarray(H(grid)))))


def sum_bounds(*bounds: Optional[TailFn]) -> TailFn:
    active = [b for b in bounds if b]
    return lambda T: math.fsum(b(T) for b in active)
