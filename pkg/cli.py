#!/usr/bin/env python3
"""
Command line for the one-level density workbench.

Exit codes: 0 success, 2 config/domain error, 3 capacity error, 4 tolerance
not met (truncation, structure, assembly or --strict acceptance checks).
"""
import functools
import io
import logging
import sys

import click

from arith import sieve_primes
from config import Config
from errors import DensityError
from harness import (ExperimentConfig, render_pairs, render_summary, run_compare, run_counting,
                     run_explicit, run_jutila, run_lab, run_predict, write_csv)
from testfn import make_test_function

logger = logging.getLogger(__name__)


def handles_errors(command):
    """Turn DensityError into a message, its remedy and the matching exit code"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except DensityError as e:
            click.echo(f"error: {e}", err=True)
            if e.remedy:
                click.echo(f"hint: {e.remedy}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def experiment_options(command):
    options = [
        click.option('--config', 'config_file', type=click.Path(), default=None,
                     help='key = value experiment file; flags override it'),
        click.option('--family', type=click.Choice(['even', '8d']), default=None),
        click.option('--x', 'x_grid', type=float, multiple=True, help='grid point, repeatable'),
        click.option('--sigma', type=float, default=None),
        click.option('--testfn', type=click.Choice(['fejer', 'hat2']), default=None),
        click.option('--quad-tol', 'quad_tol', type=float, default=None),
        click.option('--quad-T', 'quad_T', type=float, default=None),
        click.option('--quad-panels', 'quad_panels', type=int, default=None),
        click.option('--prime-limit', 'prime_limit', type=float, default=None),
        click.option('--workers', type=int, default=None),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _experiment(config_file=None, x_grid=(), prime_limit=None, **flags):
    grid = tuple(int(x) for x in x_grid) or None
    limit = int(prime_limit) if prime_limit is not None else None
    return ExperimentConfig.from_sources(config_file, x_grid=grid, prime_limit=limit, **flags)


def _emit(text, out):
    if out:
        with open(out, 'w', encoding='utf-8') as stream:
            stream.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option('--log-level', default=Config.LOG_LEVEL, show_default=True)
def cli(log_level):
    """Ratios prediction vs explicit formula for quadratic Dirichlet families"""
    logging.basicConfig(level=log_level.upper(), format=Config.LOG_FORMAT)


@cli.command()
@click.option('--limit', type=float, required=True)
@handles_errors
def sieve(limit):
    """Sieve the primes up to LIMIT"""
    table = sieve_primes(int(limit))
    largest = int(table.primes[-1]) if len(table) else 0
    click.echo(f"limit = {table.limit}\ncount = {len(table)}\nlargest = {largest}\n", nl=False)


@cli.command()
@click.option('--x', 'x_grid', type=float, multiple=True, required=True)
@handles_errors
def counting(x_grid):
    """Family counts against 3X/pi^2 and X*/(p+1)"""
    pairs = []
    for report in run_counting([int(x) for x in x_grid]):
        pairs.append((f"x_star[{report.X}]", report.x_star))
        pairs.append((f"counting_normalized[{report.X}]", f"{report.counting_normalized:.6f}"))
        for p, value in report.divisibility_normalized.items():
            pairs.append((f"divisible_normalized[{report.X},{p}]", f"{value:.6f}"))
    click.echo(render_pairs(pairs), nl=False)


@cli.command()
@experiment_options
@click.option('--out', type=click.Path(), default=None)
@handles_errors
def predict(out, **options):
    """Ratios Conjecture breakdown per grid point"""
    pairs = []
    for X, breakdown in run_predict(_experiment(**options)):
        pairs.extend((f"{key}[{X}]", f"{value:.12g}") for key, value in breakdown.as_dict().items())
    _emit(render_pairs(pairs), out)


@cli.command()
@experiment_options
@click.option('--out', type=click.Path(), default=None)
@handles_errors
def explicit(out, **options):
    """Explicit-formula breakdown per grid point"""
    pairs = []
    for X, breakdown in run_explicit(_experiment(**options)):
        pairs.extend((f"{key}[{X}]", f"{value:.12g}") for key, value in breakdown.as_dict().items())
    _emit(render_pairs(pairs), out)


@cli.command()
@experiment_options
@click.option('--out', type=click.Path(), default=None)
@click.option('--format', 'fmt', type=click.Choice(['csv', 'summary']), default='csv', show_default=True)
@click.option('--strict', is_flag=True, help='exit 4 when an acceptance check fails')
@handles_errors
def compare(out, fmt, strict, **options):
    """Both sides over the X grid, with gaps and decay fits"""
    cfg = _experiment(strict=strict or None, **options)
    report = run_compare(cfg)
    if fmt == 'csv':
        buffer = io.StringIO()
        write_csv(report, buffer)
        _emit(buffer.getvalue(), out or cfg.output_path)
    else:
        _emit(render_summary(report), out or cfg.output_path)


@cli.command()
@click.option('--kmax', type=int, default=500, show_default=True)
@click.option('--mmax', type=int, default=500, show_default=True)
@click.option('--x', 'X', type=int, default=1000, show_default=True)
@click.option('--y', 'Y', type=int, default=100, show_default=True)
@click.option('--z', 'Z', type=int, default=30, show_default=True)
@click.option('--u', 'U', type=float, default=20.0, show_default=True)
@click.option('--sigma', type=float, default=Config.SIGMA, show_default=True)
@click.option('--testfn', type=click.Choice(['fejer', 'hat2']), default=Config.TESTFN)
@click.option('--skip-sums', is_flag=True, help='only build and check the Gauss-sum table')
@click.option('--out', type=click.Path(), default=None, help='CSV dump of the Gauss-sum table')
@handles_errors
def gauss(kmax, mmax, X, Y, Z, U, sigma, testfn, skip_sums, out):
    """Gauss-sum table, its laws, and the Poisson-expansion lab"""
    f = None if skip_sums else make_test_function(testfn, sigma)
    report = run_lab(kmax, mmax, X, Y, Z, U, f, csv_target=out)
    pairs = [('law_checks', report.law_checks), ('law_violations', report.law_violations)]
    pairs.extend((f"phi_c{j}", f"{c:.6f}") for j, c in report.phi_constants.items())
    if report.smoothed:
        pairs.extend((key, f"{value:.12g}" if isinstance(value, float) else value)
                     for key, value in report.smoothed.items())
    if report.halving:
        pairs.extend((key, f"{value:.6f}") for key, value in report.halving.items())
    click.echo(render_pairs(pairs), nl=False)
    if report.law_violations:
        sys.exit(4)


@cli.command()
@click.option('--x', 'x_grid', type=float, multiple=True, required=True)
@click.option('--n', 'N', type=int, default=1000, show_default=True)
@click.option('--workers', type=int, default=None)
@handles_errors
def jutila(x_grid, N, workers):
    """Mean-square character sum statistic over the even family"""
    results = run_jutila([int(x) for x in x_grid], N, workers)
    click.echo(render_pairs((f"jutila_ratio[{X}]", f"{ratio:.6e}") for X, ratio in results), nl=False)


if __name__ == '__main__':
    cli()
