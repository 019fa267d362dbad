import io
import math
from dataclasses import replace

import numpy as np
import pytest

from arith import mobius_table
from errors import DomainError, TruncationError
from gausslab import (gauss_sum, gauss_sum_table, make_phi, mz_rz, mz_rz_table, phi_hat, phi_hat_decay_slope,
                      phi_tilde, smoothed_sum_compare, smoothing_halving)
from testfn import make_fejer


def test_gauss_sum_examples():
    assert gauss_sum(4, 3) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert gauss_sum(3, 3) == pytest.approx(0, abs=1e-12)
    assert gauss_sum(1, 5) == pytest.approx(math.sqrt(5), abs=1e-12)
    assert gauss_sum(2, 5) == pytest.approx(-math.sqrt(5), abs=1e-12)
    with pytest.raises(DomainError):
        gauss_sum(1, 4)


def test_gauss_table_matches_direct_sums():
    table = gauss_sum_table(31, 20, workers=2)
    for k in (1, 3, 9, 15, 31):
        for m in (1, 2, 7, 18):
            assert table[m, k] == pytest.approx(gauss_sum(m, k), abs=1e-10)
    with pytest.raises(DomainError):
        table[1, 33]


def test_gauss_table_laws_fast():
    report = gauss_sum_table(97, 50, workers=2).check_laws()
    assert report.ok, report.violations[:5]
    assert report.checked == 24 * 50


@pytest.mark.slow
def test_gauss_table_laws_wide():
    report = gauss_sum_table(997, 500).check_laws()
    assert report.ok, report.violations[:5]


def test_gauss_table_csv():
    stream = io.StringIO()
    gauss_sum_table(5, 3, workers=1).write_csv(stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == 'm,k,real,imag'
    assert len(lines) == 1 + 3 * 3


@pytest.mark.parametrize('d, Z, expected', [
    (12, 2, (0, 0)),
    (36, 6, (0, 0)),
    (30, 5, (1, 0)),
    (36, 2, (0, 0)),
    (36, 1, (1, -1)),
])
def test_mz_rz_examples(d, Z, expected):
    assert mz_rz(d, Z) == expected


def test_mz_rz_split_recovers_mu_squared():
    limit = 10 ** 4
    mu = mobius_table(limit).mu.astype(np.int64)
    M, R = mz_rz_table(limit, 7)
    assert np.array_equal((M + R)[1:], mu[1:] ** 2)
    for d in (1, 18, 196, 4900, 9801):
        assert mz_rz(d, 7) == (M[d], R[d])
    with pytest.raises(DomainError):
        mz_rz(0, 3)


def test_phi_shape():
    phi = make_phi(8)
    assert phi(1.5) == 1.0
    assert phi(1.0) == 0.0
    assert phi(2.0) == 0.0
    assert phi(0.5) == 0.0 and phi(2.5) == 0.0
    t = np.linspace(1, 2, 801)
    values = phi(t)
    assert np.all((values >= 0) & (values <= 1))
    assert np.allclose(values, phi(3 - t), atol=1e-12)
    assert phi.mass == pytest.approx(7 / 8)
    assert phi.derivative_constants[1] <= 4


def test_phi_rejects_bad_parameters():
    with pytest.raises(DomainError):
        make_phi(3)
    with pytest.raises(DomainError):
        make_phi(8, j_max=9)
    with pytest.raises(DomainError):
        make_phi(8).derivative(1.5, 3)


def test_phi_transforms():
    phi = make_phi(10)
    assert phi_hat(phi, 0.0) == pytest.approx(phi.mass, abs=1e-12)
    assert phi_tilde(phi, 0.0) == pytest.approx(phi.mass, abs=1e-12)
    xi = np.linspace(-40, 40, 801)
    assert np.max(np.abs(phi_hat(phi, xi))) <= phi.mass + 1e-9
    assert np.allclose(phi_hat(phi, -xi), np.conj(phi_hat(phi, xi)), atol=1e-12)
    assert np.max(np.abs(np.imag(phi_tilde(phi, xi)))) <= 1e-12


def test_phi_hat_matches_riemann_sum():
    phi = make_phi(10)
    t = np.linspace(1, 2, 200001)
    for xi in (0.7, 3.0, 12.5):
        reference = np.trapz(phi(t) * np.exp(-2j * math.pi * xi * t), t)
        assert phi_hat(phi, xi) == pytest.approx(reference, abs=1e-7)


def test_phi_hat_decays_fast_beyond_u():
    phi = make_phi(8)
    assert phi_hat_decay_slope(phi, 2 * phi.U, 12 * phi.U) <= -1.9


def test_poisson_expansion_agrees():
    f = make_fejer(1.0)
    record = smoothed_sum_compare(10 ** 3, 10 ** 2, 30, 20, f, tol=1.0)
    assert record.poisson_gap <= record.poisson_budget + 1e-4 * max(1.0, abs(record.s_m_direct))
    assert record.smoothing_gap == pytest.approx(abs(record.s_direct - record.s_smoothed))
    assert record.xi_max == 16 * 20
    assert record.edge_mass >= 0


def test_zero_g_hat_gives_zero_sums():
    record = smoothed_sum_compare(200, 30, 5, 8, make_fejer(1.0).scaled(0.0))
    for key in ('s_direct', 's_smoothed', 's_m_direct', 's_m_poisson', 'poisson_budget'):
        assert record.as_dict()[key] == 0.0


def test_poisson_truncation_error():
    with pytest.raises(TruncationError):
        smoothed_sum_compare(200, 30, 5, 8, make_fejer(1.0), xi_max=8, tol=1e-12)
    with pytest.raises(DomainError):
        smoothed_sum_compare(200, 2, 5, 8, make_fejer(1.0))


def test_edge_mass_halves_when_u_doubles():
    f = make_fejer(0.3)
    first = smoothed_sum_compare(10 ** 3, 10 ** 2, 30, 20, f, tol=1.0)
    doubled = smoothed_sum_compare(10 ** 3, 10 ** 2, 30, 40, f, tol=1.0)
    halving = smoothing_halving(first, doubled)
    assert halving['edge_mass_ratio'] == pytest.approx(0.5, abs=0.15)
    assert halving['smoothing_gap_ratio'] == pytest.approx(doubled.smoothing_gap / first.smoothing_gap)
    with pytest.raises(DomainError):
        smoothing_halving(first, replace(doubled, X=2 * 10 ** 3))
