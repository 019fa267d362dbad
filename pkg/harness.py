"""
Experiment driver: runs both sides of the one-level density over an X grid,
fits the decay of their discrepancy and renders CSV / summary reports.
"""
import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from arith import (FamilyKind, FamilySpec, check_counting, check_divisible_count, enumerate_family,
                   sieve_primes)
from config import Config
from errors import CapacityError, ConfigError, DomainError, ToleranceError
from gausslab import gauss_sum_table, make_phi, smoothed_sum_compare, smoothing_halving
from ntside import NTBreakdown, explicit_formula_total, jutila_ratio
from quadrature import QuadratureSpec
from ratios import RatiosBreakdown, ratios_prediction
from testfn import TestFunction, make_test_function, usp_density_functional

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    'X', 'x_star', 'rc_conductor', 'rc_zeta_ad_r', 'rc_r_term', 'rc_secondary', 'rc_total',
    'rc_error_budget', 'nt_s_even', 'nt_s_even_1', 'nt_s_even_2', 'nt_s_odd', 'nt_total',
    'usp', 'gap', 'r_gap',
)

GAP_SLOPE_MAX = -0.25
R_GAP_SLOPE_MAX = -0.3
USP_STABILITY = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = Config.FAMILY
    x_grid: Tuple[int, ...] = tuple(Config.X_GRID)
    sigma: float = Config.SIGMA
    testfn: str = Config.TESTFN
    quad_T: float = Config.QUAD_T
    quad_panels: Optional[int] = None
    quad_nodes: int = Config.QUAD_NODES
    quad_tol: float = Config.QUAD_TOL
    quad_small_tau: float = Config.QUAD_SMALL_TAU
    prime_limit: int = Config.PRIME_LIMIT
    workers: int = Config.WORKERS
    output_path: Optional[str] = None
    strict: bool = False

    def __post_init__(self):
        grid = tuple(int(x) for x in self.x_grid)
        object.__setattr__(self, 'x_grid', grid)
        if not grid:
            raise ConfigError("the X grid is empty", remedy="pass at least one --x")
        if any(x < 5 for x in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"X grid must be ascending integers >= 5, got {list(grid)}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        FamilyKind.parse(self.family)
        make_test_function(self.testfn, self.sigma)
        needed = self.log_x(grid[-1]) * self.sigma
        if needed > math.log(max(self.prime_limit, 2)):
            raise CapacityError(
                f"prime_limit {self.prime_limit} is below X^sigma = {math.exp(needed):.6g}",
                remedy=f"raise --prime-limit to at least {int(math.ceil(math.exp(needed)))}")

    @classmethod
    def from_sources(cls, config_file: Optional[str] = None, **flags) -> 'ExperimentConfig':
        """Defaults < environment < config file < flags (None means not given)"""
        settings = {}
        if config_file:
            settings.update(Config.load_file(config_file))
        settings.update({k: v for k, v in flags.items() if v is not None and v != ()})
        known = {f.name for f in fields(cls)}
        unknown = set(settings) - known
        if unknown:
            raise ConfigError(f"unknown experiment settings: {', '.join(sorted(unknown))}")
        return cls(**settings)

    @property
    def kind(self) -> FamilyKind:
        return FamilyKind.parse(self.family)

    def log_x(self, X: int) -> float:
        return math.log(8 * X) if self.kind is FamilyKind.EIGHT_D else math.log(X)

    def test_function(self) -> TestFunction:
        return make_test_function(self.testfn, self.sigma)

    def quadrature_spec(self, workers: Optional[int] = None) -> QuadratureSpec:
        return Config.quadrature_spec(truncation_T=self.quad_T, panels=self.quad_panels, nodes_per_panel=self.quad_nodes,
                                      abs_tol=self.quad_tol, small_tau_radius=self.quad_small_tau,
                                      workers=workers or self.workers)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    points: List[Tuple[float, float]]
    residuals: List[float]
    excluded: List[str] = field(default_factory=list)


def fit_decay(points: Iterable[Tuple[float, float]]) -> ScalingFit:
    """Ordinary least squares of log gap on log X; nonpositive gaps are dropped with a note"""
    kept, excluded = [], []
    for X, gap in points:
        if gap > 0:
            kept.append((math.log(X), math.log(gap)))
        else:
            excluded.append(f"X={X:g}: gap {gap:g} is not positive")
            logger.warning("fit_decay: excluding X=%g with gap %g", X, gap)
    if len(kept) < 3:
        raise DomainError(f"fit_decay needs at least 3 positive gaps, got {len(kept)}")
    x = np.array([p[0] for p in kept])
    y = np.array([p[1] for p in kept])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(residuals ** 2))
    r_squared = 1.0 if ss_tot <= 1e-300 else min(1.0, max(0.0, 1 - ss_res / ss_tot))
    return ScalingFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared,
                      points=kept, residuals=residuals.tolist(), excluded=excluded)


@dataclass(frozen=True)
class GridRow:
    X: int
    x_star: int
    ratios: RatiosBreakdown
    nt: NTBreakdown
    usp: float
    gap: float
    r_gap: float

    def as_row(self) -> Dict[str, float]:
        rc, nt = self.ratios, self.nt
        return {
            'X': self.X, 'x_star': self.x_star,
            'rc_conductor': rc.conductor_term, 'rc_zeta_ad_r': rc.zeta_ad_r_term, 'rc_r_term': rc.r_term_alone,
            'rc_secondary': rc.secondary_model, 'rc_total': rc.total, 'rc_error_budget': rc.error_budget,
            'nt_s_even': nt.s_even_direct, 'nt_s_even_1': nt.s_even_1, 'nt_s_even_2': nt.s_even_2,
            'nt_s_odd': nt.s_odd, 'nt_total': nt.total,
            'usp': self.usp, 'gap': self.gap, 'r_gap': self.r_gap,
        }


@dataclass
class CompareReport:
    config: ExperimentConfig
    rows: List[GridRow]
    gap_fit: Optional[ScalingFit] = None
    r_gap_fit: Optional[ScalingFit] = None
    usp_constants: List[float] = field(default_factory=list)
    usp_halves: Optional[Tuple[float, float]] = None
    checks: Dict[str, bool] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    @property
    def failed_checks(self) -> List[str]:
        return [name for name, ok in self.checks.items() if not ok]


def _strictly_decreasing(values: Sequence[float]) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))


def _grid_point(cfg: ExperimentConfig, X: int, f: TestFunction, table, spec: QuadratureSpec) -> GridRow:
    family = enumerate_family(FamilySpec(cfg.kind, X), workers=spec.workers)
    rc = ratios_prediction(family, f, spec)
    nt = explicit_formula_total(family, f, table, spec, conductor=rc.conductor_term)
    row = GridRow(X=X, x_star=family.x_star, ratios=rc, nt=nt, usp=usp_density_functional(f),
                  gap=abs(nt.total - rc.total), r_gap=abs(rc.r_term_alone + f.g0 / 2))
    logger.info("grid point X=%d done: gap=%.3e r_gap=%.3e", X, row.gap, row.r_gap)
    return row


def _try_fit(points, what: str, warnings: List[str]) -> Optional[ScalingFit]:
    try:
        return fit_decay(points)
    except DomainError as e:
        warnings.append(f"no {what} fit: {e}")
        logger.warning("no %s fit: %s", what, e)
        return None


def run_compare(cfg: ExperimentConfig) -> CompareReport:
    f = cfg.test_function()
    table = sieve_primes(cfg.prime_limit)
    grid_workers = max(1, min(len(cfg.x_grid), cfg.workers))
    spec = cfg.quadrature_spec(workers=max(1, cfg.workers // grid_workers))
    logger.info("compare: family=%s sigma=%g testfn=%s grid=%s", cfg.family, cfg.sigma, cfg.testfn,
                list(cfg.x_grid))

    with ThreadPoolExecutor(max_workers=grid_workers) as pool:
        rows = list(pool.map(lambda X: _grid_point(cfg, X, f, table, spec), cfg.x_grid))

    report = CompareReport(config=cfg, rows=rows)
    if len(rows) < 3:
        report.warnings.append(f"grid has {len(rows)} point(s); decay fits need at least 3")
        logger.warning("grid has %d point(s); skipping decay fits", len(rows))
    else:
        report.gap_fit = _try_fit([(r.X, r.gap) for r in rows], 'gap', report.warnings)
        report.r_gap_fit = _try_fit([(r.X, r.r_gap) for r in rows], 'r_gap', report.warnings)

    report.usp_constants = [abs(r.nt.total - r.usp) * cfg.log_x(r.X) for r in rows]
    if len(rows) >= 2:
        half = len(rows) // 2
        lower = float(np.mean(report.usp_constants[:half]))
        upper = float(np.mean(report.usp_constants[half:]))
        report.usp_halves = (lower, upper)

    report.checks = _checks(report)
    if cfg.strict and report.failed_checks:
        raise ToleranceError(f"acceptance checks failed: {', '.join(report.failed_checks)}",
                             remedy="inspect the CSV rows or rerun without --strict")
    return report


def _checks(report: CompareReport) -> Dict[str, bool]:
    checks = {}
    if len(report.rows) >= 2:
        checks['gap_decreasing'] = _strictly_decreasing([r.gap for r in report.rows])
        checks['r_gap_decreasing'] = _strictly_decreasing([r.r_gap for r in report.rows])
    if report.gap_fit:
        checks['gap_slope'] = report.gap_fit.slope <= GAP_SLOPE_MAX
    if report.r_gap_fit:
        checks['r_gap_slope'] = report.r_gap_fit.slope <= R_GAP_SLOPE_MAX
    if report.usp_halves and report.usp_halves[0] > 0:
        lower, upper = report.usp_halves
        checks['usp_stable'] = abs(upper / lower - 1) <= USP_STABILITY
    return checks


def write_csv(report: CompareReport, target):
    """Rows in CSV_COLUMNS order to a path or an open text stream"""
    if isinstance(target, (str, os.PathLike)):
        with open(target, 'w', newline='', encoding='utf-8') as stream:
            return write_csv(report, stream)
    writer = csv.writer(target)
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        values = row.as_row()
        writer.writerow([values[c] if c in ('X', 'x_star') else f"{values[c]:.15g}" for c in CSV_COLUMNS])


def render_summary(report: CompareReport) -> str:
    cfg = report.config
    lines = [
        f"family = {cfg.family}",
        f"sigma = {cfg.sigma:g}",
        f"testfn = {cfg.testfn}",
        f"x_grid = {','.join(str(x) for x in cfg.x_grid)}",
    ]
    for row in report.rows:
        lines.append(f"gap[{row.X}] = {row.gap:.6e}")
        lines.append(f"r_gap[{row.X}] = {row.r_gap:.6e}")
    for name, fit in (('gap', report.gap_fit), ('r_gap', report.r_gap_fit)):
        if fit:
            lines.append(f"{name}_slope = {fit.slope:.6f}")
            lines.append(f"{name}_r_squared = {fit.r_squared:.6f}")
    if report.usp_halves:
        lines.append(f"usp_constant_lower = {report.usp_halves[0]:.6f}")
        lines.append(f"usp_constant_upper = {report.usp_halves[1]:.6f}")
    for name, ok in report.checks.items():
        lines.append(f"check.{name} = {'pass' if ok else 'fail'}")
    for i, message in enumerate(report.warnings):
        lines.append(f"warning.{i} = {message}")
    return '\n'.join(lines) + '\n'


def run_predict(cfg: ExperimentConfig) -> List[Tuple[int, RatiosBreakdown]]:
    f = cfg.test_function()
    spec = cfg.quadrature_spec()
    return [(X, ratios_prediction(enumerate_family(FamilySpec(cfg.kind, X)), f, spec)) for X in cfg.x_grid]


def run_explicit(cfg: ExperimentConfig) -> List[Tuple[int, NTBreakdown]]:
    f = cfg.test_function()
    spec = cfg.quadrature_spec()
    table = sieve_primes(cfg.prime_limit)
    return [(X, explicit_formula_total(enumerate_family(FamilySpec(cfg.kind, X)), f, table, spec))
            for X in cfg.x_grid]


@dataclass(frozen=True)
class CountingReport:
    X: int
    x_star: int
    counting_normalized: float
    divisibility_normalized: Dict[int, float]


def run_counting(x_grid: Sequence[int], primes: Sequence[int] = (2, 3, 5, 7, 11, 13)) -> List[CountingReport]:
    reports = []
    for X in x_grid:
        family = enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, X))
        counting = check_counting(X, family)
        divisibility = {p: check_divisible_count(X, p, family).normalized for p in primes if p * p <= X}
        reports.append(CountingReport(X=X, x_star=family.x_star, counting_normalized=counting.normalized,
                                      divisibility_normalized=divisibility))
    return reports


def run_jutila(x_grid: Sequence[int], N: int, workers: Optional[int] = None) -> List[Tuple[int, float]]:
    results = [(X, jutila_ratio(X, N, workers=workers)) for X in x_grid]
    ratios = [r for _, r in results]
    if any(b > a for a, b in zip(ratios, ratios[1:])):
        logger.warning("jutila ratio is not non-increasing over %s: %s", list(x_grid), ratios)
    return results


@dataclass
class LabReport:
    k_max: int
    m_max: int
    law_checks: int
    law_violations: int
    phi_constants: Dict[int, float]
    smoothed: Optional[dict] = None
    halving: Optional[dict] = None


def run_lab(k_max: int, m_max: int, X: int = 1000, Y: int = 100, Z: int = 30, U: float = 20.0,
            f: Optional[TestFunction] = None, csv_target=None, workers: Optional[int] = None) -> LabReport:
    """Gauss-sum table with its law checks, Phi constants and the smoothed-sum comparison at U and 2U"""
    table = gauss_sum_table(k_max, m_max, workers)
    laws = table.check_laws()
    if csv_target is not None:
        if isinstance(csv_target, (str, os.PathLike)):
            with open(csv_target, 'w', newline='', encoding='utf-8') as stream:
                table.write_csv(stream)
        else:
            table.write_csv(csv_target)
    phi = make_phi(U)
    report = LabReport(k_max=k_max, m_max=m_max, law_checks=laws.checked, law_violations=len(laws.violations),
                       phi_constants=phi.derivative_constants)
    if f is not None:
        first = smoothed_sum_compare(X, Y, Z, U, f)
        doubled = smoothed_sum_compare(X, Y, Z, 2 * U, f)
        report.smoothed = first.as_dict()
        report.halving = smoothing_halving(first, doubled)
    return report


def render_pairs(pairs: Iterable[Tuple[str, object]]) -> str:
    return ''.join(f"{key} = {value}\n" for key, value in pairs)
