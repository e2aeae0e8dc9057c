import cmath

import numpy as np
import pytest

from models.errors import BranchMismatch, DivisionByZeroSeries, EmptyPrecision, NonzeroResidue, OddLeadingOrder
from services.series import LaurentSeries, arith, poly_at


def close(a: LaurentSeries, b: LaurentSeries, tol=1e-12):
    top = min(a.trunc, b.trunc)
    lo = min(a.lead, b.lead)
    return np.allclose(a.window(lo, top), b.window(lo, top), atol=tol)


def test_zero_is_canonical():
    z = LaurentSeries(0, [0.0, 1e-15], 4)
    assert z.is_zero
    assert z.lead == z.trunc == 4


def test_leading_zeros_are_stripped():
    s = LaurentSeries(-2, [0.0, 0.0, 3.0, 1.0], 5)
    assert s.lead == 0
    assert s.coeff(0) == 3.0


def test_polynomial_identity():
    a = LaurentSeries(-1, [1, 1], 5)
    b = LaurentSeries(0, [-1, 1], 5)
    prod = arith(a, b, "mul")
    assert prod.trunc == 4
    assert prod.coeff(-1) == pytest.approx(-1)
    assert prod.coeff(0) == pytest.approx(0)
    assert prod.coeff(1) == pytest.approx(1)


def test_division_by_itself():
    a = LaurentSeries(-2, [2 - 1j, 0.5, 3.0], 6)
    q = a / a
    assert q.lead == 0
    assert q.coeff(0) == pytest.approx(1)
    assert np.allclose(q.window(1, q.trunc), 0)


def test_inverse_of_cubic():
    a = LaurentSeries(0, [6, 11, 6, 1], 3)
    prod = a * a.inverse()
    assert prod.trunc == 3
    assert np.allclose(prod.window(0, 3), [1, 0, 0])


def test_add_uses_smaller_truncation():
    a = LaurentSeries(0, [1, 2, 3], 3)
    b = LaurentSeries(-1, [1, 1], 2)
    assert (a + b).trunc == 2
    assert (a - b).coeff(-1) == pytest.approx(-1)


def test_scalars_are_exact():
    a = LaurentSeries(-1, [1, 2], 3)
    assert (a + 1).trunc == 3
    assert (2 * a).coeff(-1) == pytest.approx(2)
    assert (1 - a).coeff(0) == pytest.approx(-1)


def test_coeff_beyond_truncation():
    with pytest.raises(EmptyPrecision):
        LaurentSeries(0, [1.0], 3).coeff(3)


def test_division_by_zero_series():
    with pytest.raises(DivisionByZeroSeries):
        LaurentSeries(0, [1.0], 4) / LaurentSeries.zero(4)


def test_sqrt_trivial():
    r = LaurentSeries(0, [1.0], 4).sqrt(1.0)
    assert r.coeff(0) == pytest.approx(1)
    assert np.allclose(r.window(1, 4), 0)


def test_sqrt_of_cubic():
    r = LaurentSeries(0, [6, 11, 6, 1], 8).sqrt(cmath.sqrt(6))
    assert r.coeff(0) == pytest.approx(2.449490, abs=1e-6)
    assert r.coeff(1) == pytest.approx(2.245366, abs=1e-6)
    assert close(r * r, LaurentSeries(0, [6, 11, 6, 1], 8), 1e-10)


def test_sqrt_odd_lead():
    with pytest.raises(OddLeadingOrder):
        LaurentSeries(1, [1.0, 2.0], 5).sqrt(1.0)


def test_sqrt_branch_mismatch():
    with pytest.raises(BranchMismatch):
        LaurentSeries(0, [4.0, 1.0], 5).sqrt(3.0)


def test_sqrt_squares_back_on_random_series():
    rng = np.random.default_rng(7)
    for _ in range(20):
        lead_mod = rng.uniform(0.1, 10)
        c = 0.3 * lead_mod * (rng.standard_normal(10) + 1j * rng.standard_normal(10))
        c[0] = lead_mod * cmath.exp(1j * rng.uniform(0, 2 * np.pi))
        a = LaurentSeries(-2, c, 8)
        r = a.sqrt(cmath.sqrt(c[0]))
        sq = r * r
        scale = np.max(np.abs(a.coeffs))
        assert np.max(np.abs(sq.window(-2, sq.trunc) - a.window(-2, sq.trunc))) < 1e-10 * scale


def test_antiderivative_power_rule():
    F = LaurentSeries(-2, [1, 0, 3, 2], 4).antiderivative()
    assert F.coeff(-1) == pytest.approx(-1)
    assert F.coeff(0) == 0
    assert F.coeff(1) == pytest.approx(3)
    assert F.coeff(2) == pytest.approx(1)


def test_antiderivative_of_zero():
    assert LaurentSeries.zero(5).antiderivative().is_zero


def test_antiderivative_rejects_residue():
    with pytest.raises(NonzeroResidue):
        LaurentSeries(-1, [1.0], 4).antiderivative()


def test_antiderivative_then_derivative():
    a = LaurentSeries(-3, [1, 2, 0, 4, 5, 6], 3)
    back = a.antiderivative().derivative()
    assert close(back, a)


def test_residue():
    assert LaurentSeries(-2, [1, 2, 3], 3).residue() == pytest.approx(2)
    assert LaurentSeries(0, [1, 2, 3], 3).residue() == 0


def test_residue_antisymmetry_example():
    f1 = LaurentSeries(-1, [1.0], 4)
    f2 = LaurentSeries(1, [1.0], 6)
    assert (f1 * f2.derivative()).residue() == pytest.approx(1)
    assert (f2 * f1.derivative()).residue() == pytest.approx(-1)


def test_residue_antisymmetry_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a = LaurentSeries(int(rng.integers(-3, 1)), rng.standard_normal(8) + 1j * rng.standard_normal(8), 6)
        b = LaurentSeries(int(rng.integers(-3, 1)), rng.standard_normal(8) + 1j * rng.standard_normal(8), 6)
        assert abs((a * b.derivative()).residue() + (b * a.derivative()).residue()) < 1e-10


def test_truncation_never_overclaims():
    """Compare against the same computation carried with twice the terms."""
    rng = np.random.default_rng(3)
    for _ in range(20):
        la, lb = int(rng.integers(-3, 2)), int(rng.integers(-3, 2))
        ca = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        cb = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        ca[0] += 3.0
        cb[0] += 3.0
        long_a, long_b = LaurentSeries(la, ca, la + 12), LaurentSeries(lb, cb, lb + 12)
        short_a, short_b = LaurentSeries(la, ca, la + 6), LaurentSeries(lb, cb, lb + 6)
        for op in ("add", "sub", "mul", "div"):
            short = arith(short_a, short_b, op)
            long = arith(long_a, long_b, op)
            assert short.trunc <= long.trunc
            assert np.allclose(short.window(short.lead, short.trunc), long.window(short.lead, short.trunc), atol=1e-9)


def test_poly_at_series():
    z = LaurentSeries(0, [2.0, 1.0], 6)
    s = poly_at([0, -1, 0, 1], z)
    assert np.allclose(s.window(0, 4), [6, 11, 6, 1])


def test_integer_powers():
    s = LaurentSeries(-1, [1.0, 1.0], 5)
    assert close(s ** 3, s * s * s)
    assert (s ** 0).coeff(0) == 1
