"""Seeded random curves, divisors and objects for the property suite.

All draws go through ``numpy.random.default_rng(seed)`` (PCG64), so a
seed fixes every instance.
"""
import logging

import numpy as np
from numpy.polynomial import polynomial as npoly

from models.errors import SpecialDivisor
from services.curve import Curve, CurvePoint, Divisor, make_curve
from services.funcfield import Differential, MeroFunction, exterior_derivative, holomorphic_basis, is_nonspecial, linear_combination

logger = logging.getLogger(__name__)

ROOT_RADIUS = 2.0
ROOT_SEPARATION = 0.5
POINT_RADIUS = 2.5
POINT_SEPARATION = 0.3


def _disk(rng: np.random.Generator, radius: float) -> complex:
    r = radius * np.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return complex(r * np.cos(phi), r * np.sin(phi))


def _spread(rng: np.random.Generator, n: int, radius: float, separation: float, avoid=()) -> list[complex]:
    out: list[complex] = []
    taken = list(avoid)
    while len(out) < n:
        z = _disk(rng, radius)
        if all(abs(z - w) > separation for w in taken):
            out.append(z)
            taken.append(z)
    return out


def random_curve(rng: np.random.Generator, genus: int) -> Curve:
    roots = _spread(rng, 2 * genus + 1, ROOT_RADIUS, ROOT_SEPARATION)
    return make_curve(npoly.polyfromroots(roots))


def random_points(rng: np.random.Generator, curve: Curve, n: int, avoid=()) -> list[CurvePoint]:
    xs = _spread(rng, n, POINT_RADIUS, POINT_SEPARATION, [*curve.branch_x, *avoid])
    return [curve.point(x, 1 if rng.uniform() < 0.5 else -1) for x in xs]


def random_divisor(rng: np.random.Generator, curve: Curve, avoid=(), attempts: int = 50) -> Divisor:
    """Non-special divisor of g points with distinct x-coordinates."""
    for _ in range(attempts):
        d = Divisor.of(random_points(rng, curve, curve.genus, avoid))
        if is_nonspecial(curve, d):
            return d
    raise SpecialDivisor(f"no non-special divisor found on {curve} in {attempts} draws")


def random_coeffs(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def random_function(rng: np.random.Generator, curve: Curve, n_poles: int = 2, avoid=()) -> MeroFunction:
    """(p + q y) / prod (x - x_j) with random numerators and simple poles at random x_j."""
    xs = _spread(rng, n_poles, POINT_RADIUS, POINT_SEPARATION, [*curve.branch_x, *avoid])
    p = random_coeffs(rng, n_poles + 1, 0.5)
    q = random_coeffs(rng, max(n_poles - curve.genus, 1), 0.5)
    return MeroFunction.build(p, q, tuple((x, 1) for x in xs))


def random_second_kind(rng: np.random.Generator, curve: Curve, avoid=()) -> Differential:
    """An exact form plus a random holomorphic differential."""
    f = random_function(rng, curve, 2, avoid)
    hol = linear_combination(random_coeffs(rng, curve.genus), holomorphic_basis(curve))
    return (exterior_derivative(curve, f) + hol).with_kind("second_kind")
