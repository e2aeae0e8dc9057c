"""Odd-degree hyperelliptic curves y^2 = P(x), their points, divisors and local charts.

Local coordinates are fixed per kind of place:

* ordinary point (x0, y0):  z = x - x0
* branch point (e, 0):      s with x = e + s^2, y = s * v(s)
* the point at infinity:    t with x = t^-2, y = t^-(2g+1) * u(t)

Divisor points are always ordinary; branch charts exist so residues and
pairings can be evaluated at every place of the curve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly

from config import settings
from models.errors import (
    BranchPoint,
    DegreeTooSmall,
    InadmissibleSupport,
    NotOnCurve,
    NotSquarefree,
    WrongDegreeParity,
)
from services.series import LaurentSeries, principal_sqrt
from utils import polys

logger = logging.getLogger(__name__)

COORDINATE_CONVENTION = "z = x - x(P) at every finite non-branch point"


@dataclass(frozen=True)
class CurvePoint:
    x: complex
    y: complex

    def __repr__(self) -> str:
        return f"({self.x:.6g}, {self.y:.6g})"


class PointAtInfinity:
    """The unique point at infinity of an odd-degree model."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "infinity"

    def __reduce__(self):
        return (PointAtInfinity, ())


INFINITY = PointAtInfinity()

Place = Union[CurvePoint, PointAtInfinity]


@dataclass(frozen=True, eq=False)
class Curve:
    pcoeffs: np.ndarray
    genus: int
    branch_x: np.ndarray

    @property
    def degree(self) -> int:
        return self.pcoeffs.size - 1

    @property
    def leading(self) -> complex:
        return complex(self.pcoeffs[-1])

    @property
    def dpcoeffs(self) -> np.ndarray:
        return polys.derivative(self.pcoeffs)

    def P(self, x):
        return npoly.polyval(x, self.pcoeffs)

    def dP(self, x):
        return npoly.polyval(x, self.dpcoeffs)

    def branch_scale(self, x: complex) -> float:
        return settings.branch_tol * (1.0 + abs(x) ** self.genus)

    def nearest_branch(self, x: complex) -> tuple[int, float]:
        dist = np.abs(self.branch_x - x)
        idx = int(np.argmin(dist))
        return idx, float(dist[idx])

    def point(self, x: complex, sheet: int = 1) -> CurvePoint:
        """The point above x on the chosen sheet (principal square root times ``sheet``)."""
        y = principal_sqrt(self.P(complex(x)))
        return CurvePoint(complex(x), sheet * y)

    def on_curve(self, p: CurvePoint, tol: float | None = None) -> bool:
        tol = settings.on_curve_tol if tol is None else tol
        px = self.P(p.x)
        return abs(p.y * p.y - px) <= tol * (1.0 + abs(px))

    def is_branch(self, p: CurvePoint) -> bool:
        return abs(p.y) <= self.branch_scale(p.x)

    def conjugate(self, p: CurvePoint) -> CurvePoint:
        return CurvePoint(p.x, -p.y)

    def project(self, x: complex, y_hint: complex) -> CurvePoint:
        """The point above x on the sheet closest to ``y_hint``."""
        y = principal_sqrt(self.P(complex(x)))
        return CurvePoint(complex(x), y if abs(y - y_hint) <= abs(y + y_hint) else -y)

    def __repr__(self) -> str:
        terms = " + ".join(f"({c:.6g})x^{k}" for k, c in enumerate(self.pcoeffs) if c != 0)
        return f"Curve(y^2 = {terms}, g={self.genus})"


def _sylvester(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sylvester matrix of two polynomials given in ascending order."""
    m, n = a.size - 1, b.size - 1
    size = m + n
    mat = np.zeros((size, size), dtype=complex)
    for i in range(n):
        mat[i, i:i + m + 1] = a[::-1]
    for i in range(m):
        mat[n + i, i:i + n + 1] = b[::-1]
    return mat


def make_curve(pcoeffs) -> Curve:
    """Validate P (ascending coefficients) and build the curve y^2 = P(x)."""
    c = np.atleast_1d(np.asarray(pcoeffs, dtype=complex)).ravel()
    if c.size % 2:
        raise WrongDegreeParity(f"P has degree {c.size - 1}; an odd degree 2g+1 is required")
    if c.size < 4:
        raise DegreeTooSmall(f"P has degree {c.size - 1}; genus 0 curves are not supported")
    if c[-1] == 0:
        raise WrongDegreeParity("leading coefficient of P is zero; the stated degree is not attained")
    genus = (c.size - 2) // 2

    roots = npoly.polyroots(c)
    gaps = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() <= settings.separation_tol:
        raise NotSquarefree(f"branch points closer than {settings.separation_tol:g}: {np.sort_complex(roots)}")
    # an exact double root splits into a pair about sqrt(eps) apart; the resultant still sees it
    sv = scipy.linalg.svd(_sylvester(c, polys.derivative(c)), compute_uv=False)
    if sv[-1] <= 16 * np.finfo(float).eps * sv[0]:
        raise NotSquarefree(f"P and P' share a root (relative resultant {sv[-1] / sv[0]:.2e}); the curve is singular")
    branch_x = np.sort_complex(roots)
    branch_x.setflags(write=False)
    c.setflags(write=False)
    logger.debug(f"curve of genus {genus} with branch points {branch_x}")
    return Curve(c, genus, branch_x)


def as_point(curve: Curve, p: CurvePoint) -> CurvePoint:
    """Check that p lies on the curve."""
    if not curve.on_curve(p):
        raise NotOnCurve(f"point {p} is not on {curve}: |y^2 - P(x)| = {abs(p.y ** 2 - curve.P(p.x)):.3e}")
    return p


@dataclass(frozen=True)
class Divisor:
    """Effective divisor as (place, multiplicity) pairs."""

    points: tuple[tuple[Place, int], ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, places: Iterable[Place]) -> Divisor:
        counts: list[list] = []
        for p in places:
            for entry in counts:
                if _same_place(entry[0], p):
                    entry[1] += 1
                    break
            else:
                counts.append([p, 1])
        return cls(tuple((p, m) for p, m in counts))

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.points)

    @property
    def support(self) -> list[Place]:
        return [p for p, _ in self.points]

    def multiplicity(self, place: Place) -> int:
        return sum(m for p, m in self.points if _same_place(p, place))

    def __add__(self, other: Divisor) -> Divisor:
        merged = [list(e) for e in self.points]
        for p, m in other.points:
            for entry in merged:
                if _same_place(entry[0], p):
                    entry[1] += m
                    break
            else:
                merged.append([p, m])
        return Divisor(tuple((p, m) for p, m in merged))

    def __repr__(self) -> str:
        return " + ".join(f"{m}*{p}" if m > 1 else f"{p}" for p, m in self.points) or "0"


def _same_place(a: Place, b: Place) -> bool:
    if a is INFINITY or b is INFINITY:
        return a is b
    tol = settings.separation_tol
    return abs(a.x - b.x) <= tol * (1.0 + abs(a.x)) and abs(a.y - b.y) <= tol * (1.0 + abs(a.y))


def same_place(a: Place, b: Place) -> bool:
    return _same_place(a, b)


def check_admissible(curve: Curve, d: Divisor, allow_infinity: bool = False) -> None:
    """Every support point is on the curve, finite and away from the branch points."""
    for p, m in d.points:
        if m <= 0:
            raise InadmissibleSupport(f"divisor {d} has non-positive multiplicity {m} at {p}")
        if p is INFINITY:
            if allow_infinity:
                continue
            raise InadmissibleSupport(f"divisor {d} contains the point at infinity")
        as_point(curve, p)
        if curve.is_branch(p):
            raise InadmissibleSupport(f"divisor {d} contains the branch point {p}")


def check_distinguished(curve: Curve, d: Divisor) -> None:
    """Degree-g divisor with g simple points and pairwise distinct x-coordinates."""
    check_admissible(curve, d)
    if d.degree != curve.genus or any(m != 1 for _, m in d.points):
        raise InadmissibleSupport(f"divisor {d} must consist of {curve.genus} distinct simple points")
    xs = [p.x for p in d.support]
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if abs(xs[i] - xs[j]) <= settings.separation_tol:
                raise InadmissibleSupport(f"divisor {d} has two points above x = {xs[i]:.6g}")


# local charts
class OrdinaryChart:
    """z = x - x0 at a finite non-branch point."""

    kind = "ordinary"

    def __init__(self, curve: Curve, p: CurvePoint):
        self.curve = curve
        self.center = p

    def poly(self, coeffs, n: int) -> LaurentSeries:
        return LaurentSeries(0, polys.taylor_shift(coeffs, self.center.x), n)

    def x(self, n: int) -> LaurentSeries:
        return LaurentSeries(0, [self.center.x, 1.0], n)

    def y(self, n: int) -> LaurentSeries:
        return self.poly(self.curve.pcoeffs, n).sqrt(self.center.y)

    def dx(self, n: int) -> LaurentSeries:
        return LaurentSeries(0, [1.0], n)

    def linear_factor(self, root: complex, n: int) -> LaurentSeries:
        d = self.center.x - root
        if abs(d) <= settings.separation_tol * (1.0 + abs(root)):
            return LaurentSeries(1, [1.0], 1 + n)
        return LaurentSeries(0, [d, 1.0], n)


class BranchChart:
    """s with x = e + s^2 at a branch point (e, 0)."""

    kind = "branch"

    def __init__(self, curve: Curve, e: complex):
        self.curve = curve
        self.center = CurvePoint(complex(e), 0j)
        shifted = polys.taylor_shift(curve.pcoeffs, e)
        # P(e + u) / u with the (numerically zero) constant term dropped
        self._quotient = shifted[1:]

    def _in_s(self, coeffs_u, n: int) -> LaurentSeries:
        c = np.asarray(coeffs_u, dtype=complex)
        out = np.zeros(2 * c.size - 1, dtype=complex)
        out[::2] = c
        return LaurentSeries(0, out, n)

    def poly(self, coeffs, n: int) -> LaurentSeries:
        return self._in_s(polys.taylor_shift(coeffs, self.center.x), n)

    def x(self, n: int) -> LaurentSeries:
        return self._in_s([self.center.x, 1.0], n)

    def y(self, n: int) -> LaurentSeries:
        v2 = self._in_s(self._quotient, n)
        v = v2.sqrt(principal_sqrt(self._quotient[0]))
        return v.shift(1)

    def dx(self, n: int) -> LaurentSeries:
        return LaurentSeries(1, [2.0], 1 + n)

    def linear_factor(self, root: complex, n: int) -> LaurentSeries:
        d = self.center.x - root
        if abs(d) <= settings.separation_tol * (1.0 + abs(root)):
            return LaurentSeries(2, [1.0], 2 + n)
        return LaurentSeries(0, [d, 0.0, 1.0], n)


class InfinityChart:
    """t with x = t^-2 at the point at infinity."""

    kind = "infinity"

    def __init__(self, curve: Curve):
        self.curve = curve
        self.center = INFINITY

    def poly(self, coeffs, n: int) -> LaurentSeries:
        c = polys.trim(coeffs)
        deg = c.size - 1
        out = np.zeros(2 * deg + 1, dtype=complex)
        out[::2] = c[::-1]
        return LaurentSeries(-2 * deg, out, -2 * deg + n)

    def x(self, n: int) -> LaurentSeries:
        return LaurentSeries(-2, [1.0], -2 + n)

    def y(self, n: int) -> LaurentSeries:
        g = self.curve.genus
        u2 = self.poly(self.curve.pcoeffs, n).shift(4 * g + 2)
        return u2.sqrt(principal_sqrt(self.curve.leading)).shift(-(2 * g + 1))

    def dx(self, n: int) -> LaurentSeries:
        return LaurentSeries(-3, [-2.0], -3 + n)

    def linear_factor(self, root: complex, n: int) -> LaurentSeries:
        return LaurentSeries(-2, [1.0, 0.0, -root], -2 + n)


Chart = Union[OrdinaryChart, BranchChart, InfinityChart]


def chart_at(curve: Curve, place: Place) -> Chart:
    if place is INFINITY:
        return InfinityChart(curve)
    if curve.is_branch(place):
        idx, _ = curve.nearest_branch(place.x)
        return BranchChart(curve, curve.branch_x[idx])
    return OrdinaryChart(curve, place)


def expand_y(curve: Curve, p: CurvePoint, order: int | None = None) -> LaurentSeries:
    """Taylor series of y in z = x - p.x, accurate through z^(order-1)."""
    order = settings.series_order if order is None else order
    if curve.is_branch(p):
        raise BranchPoint(f"{p} is a branch point of {curve}; x - {p.x:.6g} is not a local coordinate there")
    return OrdinaryChart(curve, p).y(order)


def expand_at_infinity(curve: Curve, order: int | None = None) -> tuple[LaurentSeries, LaurentSeries]:
    """Expansions of x and y in the local parameter t at infinity, ``order`` terms each."""
    order = settings.series_order if order is None else order
    chart = InfinityChart(curve)
    return chart.x(order), chart.y(order)
