import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from arith import FamilyKind, FamilySpec, enumerate_family  # noqa: E402
from quadrature import QuadratureSpec  # noqa: E402
from testfn import make_fejer, make_fejer_squared_hat  # noqa: E402


@pytest.fixture(scope='session')
def small_spec():
    """Short truncation that is still certified for the hat2 kind"""
    return QuadratureSpec(truncation_T=200.0, panels=200, nodes_per_panel=16, abs_tol=1e-5,
                          small_tau_radius=1e-3, workers=2)


@pytest.fixture(scope='session')
def hat2():
    return make_fejer_squared_hat(0.3)


@pytest.fixture(scope='session')
def fejer():
    return make_fejer(0.3)


@pytest.fixture(scope='session')
def family_1e4():
    return enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, 10 ** 4), workers=2)


@pytest.fixture(scope='session')
def family_1e3():
    return enumerate_family(FamilySpec(FamilyKind.EVEN_FUNDAMENTAL, 10 ** 3), workers=2)
