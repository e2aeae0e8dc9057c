"""Truncated Laurent series over complex doubles.

A series is ``sum_k coeffs[k] z^(lead + k) + O(z^trunc)``. Values are
immutable; every operation returns a new series whose truncation is the
tightest one the inputs justify. Plain numbers are treated as exact.
"""
from __future__ import annotations

import cmath
import logging
from dataclasses import dataclass
from numbers import Number
from typing import Literal

import numpy as np

from config import settings
from models.errors import (
    BranchMismatch,
    DivisionByZeroSeries,
    EmptyPrecision,
    NonzeroResidue,
    OddLeadingOrder,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LaurentSeries:
    __array_ufunc__ = None

    lead: int
    coeffs: np.ndarray
    trunc: int

    def __post_init__(self):
        lead, trunc = int(self.lead), int(self.trunc)
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).ravel()
        c = c[: max(0, trunc - lead)]
        big = np.flatnonzero(np.abs(c) > settings.cleanup_threshold)
        if big.size == 0:
            lead, c = trunc, np.zeros(0, dtype=complex)
        else:
            lead += int(big[0])
            c = c[big[0]:].copy()
        c.setflags(write=False)
        object.__setattr__(self, "lead", lead)
        object.__setattr__(self, "trunc", trunc)
        object.__setattr__(self, "coeffs", c)

    # construction
    @classmethod
    def zero(cls, trunc: int) -> LaurentSeries:
        return cls(trunc, [], trunc)

    @classmethod
    def monomial(cls, exponent: int, scale: complex = 1.0, terms: int | None = None) -> LaurentSeries:
        terms = settings.series_order if terms is None else terms
        return cls(exponent, [scale], exponent + terms)

    @classmethod
    def from_polynomial(cls, coeffs, trunc: int, lead: int = 0) -> LaurentSeries:
        return cls(lead, coeffs, trunc)

    # inspection
    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def precision(self) -> int:
        """Number of known coefficients counted from the lead."""
        return self.trunc - self.lead

    def coeff(self, exponent: int) -> complex:
        if exponent >= self.trunc:
            raise EmptyPrecision(f"coefficient of z^{exponent} requested from a series known only below z^{self.trunc}")
        k = exponent - self.lead
        if k < 0 or k >= self.coeffs.size:
            return 0j
        return complex(self.coeffs[k])

    def window(self, start: int, stop: int) -> np.ndarray:
        """Coefficients of z^start .. z^(stop-1)."""
        return np.array([self.coeff(e) for e in range(start, stop)], dtype=complex)

    def truncate(self, trunc: int) -> LaurentSeries:
        return LaurentSeries(self.lead, self.coeffs, min(self.trunc, trunc))

    def shift(self, k: int) -> LaurentSeries:
        """Multiply by z^k."""
        return LaurentSeries(self.lead + k, self.coeffs, self.trunc + k)

    def scale(self, s: complex) -> LaurentSeries:
        if s == 0:
            return LaurentSeries.zero(self.trunc)
        return LaurentSeries(self.lead, self.coeffs * s, self.trunc)

    def __repr__(self) -> str:
        terms = " + ".join(f"({c:.6g})z^{self.lead + k}" for k, c in enumerate(self.coeffs[:6]))
        more = " + ..." if self.coeffs.size > 6 else ""
        return f"LaurentSeries({terms or '0'}{more} + O(z^{self.trunc}))"

    # arithmetic
    def _add(self, other: LaurentSeries, sign: int) -> LaurentSeries:
        trunc = min(self.trunc, other.trunc)
        lo = min(self.lead, other.lead)
        out = np.zeros(max(0, trunc - lo), dtype=complex)
        for series, s in ((self, 1), (other, sign)):
            n = min(series.coeffs.size, trunc - series.lead)
            if n > 0:
                start = series.lead - lo
                out[start:start + n] += s * series.coeffs[:n]
        return LaurentSeries(lo, out, trunc)

    def _mul(self, other: LaurentSeries) -> LaurentSeries:
        trunc = min(self.lead + other.trunc, other.lead + self.trunc)
        if self.is_zero or other.is_zero:
            return LaurentSeries.zero(trunc)
        lead = self.lead + other.lead
        return LaurentSeries(lead, np.convolve(self.coeffs, other.coeffs)[: trunc - lead], trunc)

    def inverse(self) -> LaurentSeries:
        if self.is_zero:
            raise DivisionByZeroSeries(f"cannot invert a series that vanishes through z^{self.trunc - 1}")
        n = self.precision
        u = np.zeros(n, dtype=complex)
        u[: self.coeffs.size] = self.coeffs
        v = np.zeros(n, dtype=complex)
        v[0] = 1.0 / u[0]
        for k in range(1, n):
            v[k] = -np.dot(u[1:k + 1], v[k - 1::-1][:k]) / u[0]
        return LaurentSeries(-self.lead, v, -self.lead + n)

    def _coerce(self, other) -> LaurentSeries | None:
        if isinstance(other, LaurentSeries):
            return other
        if isinstance(other, Number):
            # exact constant: as precise as self
            return LaurentSeries(0, [complex(other)], max(self.trunc, 1))
        return None

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is None else self._add(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is None else self._add(other, -1)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is None else other._add(self, -1)

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(complex(other))
        if isinstance(other, LaurentSeries):
            return self._mul(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            if other == 0:
                raise DivisionByZeroSeries("division of a series by the scalar 0")
            return self.scale(1.0 / complex(other))
        if isinstance(other, LaurentSeries):
            return self._mul(other.inverse())
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Number):
            return self.inverse().scale(complex(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        if k == 0:
            return LaurentSeries(0, [1.0], max(self.precision, 1))
        result = self
        for _ in range(k - 1):
            result = result._mul(self)
        return result

    # calculus
    def derivative(self) -> LaurentSeries:
        exps = self.lead + np.arange(self.coeffs.size)
        return LaurentSeries(self.lead - 1, self.coeffs * exps, self.trunc - 1)

    def residue(self) -> complex:
        k = -1 - self.lead
        if k < 0 or k >= self.coeffs.size or self.trunc <= -1:
            return 0j
        return complex(self.coeffs[k])

    def antiderivative(self, tol: float | None = None) -> LaurentSeries:
        """Termwise primitive with zero constant term.

        Only defined when the z^-1 coefficient vanishes (a local
        differential of the second kind).
        """
        tol = settings.residue_tol if tol is None else tol
        res = self.residue()
        if abs(res) > tol:
            raise NonzeroResidue(f"local residue {res:.3e} exceeds {tol:.1e}; no local antiderivative")
        exps = self.lead + np.arange(self.coeffs.size)
        safe = np.where(exps == -1, 1, exps + 1)
        coeffs = np.where(exps == -1, 0.0, self.coeffs / safe)
        return LaurentSeries(self.lead + 1, coeffs, self.trunc + 1)

    def sqrt(self, branch: complex) -> LaurentSeries:
        if self.is_zero:
            return LaurentSeries.zero(self.trunc // 2)
        if self.lead % 2:
            raise OddLeadingOrder(f"series with odd leading exponent {self.lead} has no Laurent square root")
        a0 = complex(self.coeffs[0])
        if abs(branch * branch - a0) > 1e-8 * max(1.0, abs(a0)):
            raise BranchMismatch(f"branch {branch:.6g} does not square to the leading coefficient {a0:.6g}")
        n = self.precision
        u = np.zeros(n, dtype=complex)
        u[: self.coeffs.size] = self.coeffs
        r = np.zeros(n, dtype=complex)
        r[0] = branch
        for k in range(1, n):
            r[k] = (u[k] - np.dot(r[1:k], r[k - 1:0:-1])) / (2.0 * branch)
        half = self.lead // 2
        return LaurentSeries(half, r, half + n)


def principal_sqrt(value: complex) -> complex:
    return cmath.sqrt(complex(value))


def arith(a: LaurentSeries, b: LaurentSeries, op: Literal["add", "sub", "mul", "div"]) -> LaurentSeries:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown series operation {op!r}")


def sqrt(a: LaurentSeries, branch: complex) -> LaurentSeries:
    return a.sqrt(branch)


def antiderivative(a: LaurentSeries, tol: float | None = None) -> LaurentSeries:
    return a.antiderivative(tol)


def residue(a: LaurentSeries) -> complex:
    return a.residue()


def derivative(a: LaurentSeries) -> LaurentSeries:
    return a.derivative()


def poly_at(coeffs, s: LaurentSeries) -> LaurentSeries:
    """Evaluate a polynomial (ascending coefficients) at a series by Horner's rule."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    result = LaurentSeries(0, [c[-1]], max(s.precision, 1))
    for ck in c[-2::-1]:
        result = result * s + complex(ck)
    return result
