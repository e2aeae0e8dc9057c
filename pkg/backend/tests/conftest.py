import cmath

import numpy as np
import pytest

from services.curve import make_curve
from services.verification import flow_fixture


@pytest.fixture
def elliptic():
    """y^2 = x^3 - x."""
    return make_curve([0, -1, 0, 1])


@pytest.fixture
def p2(elliptic):
    return elliptic.point(2.0, 1)


@pytest.fixture
def quintic():
    """y^2 = x^5 - 1, genus 2."""
    return make_curve([-1, 0, 0, 0, 0, 1])


@pytest.fixture
def genus3():
    roots = [-2.0, -1.2, -0.3 + 0.8j, 0.4, 0.9 - 0.7j, 1.5, 2.1 + 0.2j]
    return make_curve(np.polynomial.polynomial.polyfromroots(roots))


@pytest.fixture
def flow_setup():
    return flow_fixture()


@pytest.fixture
def sqrt6():
    return cmath.sqrt(6)
