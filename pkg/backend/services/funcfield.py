"""Meromorphic functions and differentials on y^2 = P(x).

Functions are stored as (p(x) + q(x) y) / r(x) and differentials as
(a(x) + b(x) y) / c(x) dx, with y^2 already reduced through P. The
denominators r and c are kept factored as pole multisets, so common
factors can be cancelled exactly where the numerators vanish.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from numbers import Number
from typing import Iterable, Literal, Sequence, Union

import numpy as np

from config import settings
from models.errors import BranchPoint, EmptyPrecision, InadmissibleSupport, RankDeficiency
from services.curve import (
    INFINITY,
    Curve,
    CurvePoint,
    Divisor,
    OrdinaryChart,
    Place,
    chart_at,
    check_admissible,
    same_place,
)
from services.series import LaurentSeries
from utils import linalg, polys
from utils.polys import Poles

logger = logging.getLogger(__name__)

Kind = Literal["first_kind", "second_kind", "general"]

# relative size below which leading numerator coefficients are treated as noise
TRIM_TOL = 1e-14


def _canonical(numerators: Sequence, poles: Poles) -> tuple[list[np.ndarray], Poles]:
    nums, kept = polys.cancel_common(numerators, poles, settings.cancel_tol)
    return [polys.trim(n, TRIM_TOL) for n in nums], kept


def _combine_poles(first: Poles, second: Poles, mode: str = "max") -> Poles:
    return polys.merge_poles(first, second, settings.separation_tol, mode)


def _lift(nums: Sequence, poles: Poles, target: Poles) -> list[np.ndarray]:
    factor = polys.missing_factor(poles, target, settings.separation_tol)
    return [polys.mul(n, factor) for n in nums]


@dataclass(frozen=True, eq=False)
class MeroFunction:
    """f = (p(x) + q(x) y) / r(x), r = prod (x - root)^mult."""

    __array_ufunc__ = None

    p: np.ndarray
    q: np.ndarray
    poles: Poles = ()

    @classmethod
    def build(cls, p, q, poles: Poles = ()) -> MeroFunction:
        (p, q), poles = _canonical([polys.as_poly(p), polys.as_poly(q)], tuple(poles))
        return cls(p, q, poles)

    @classmethod
    def from_polys(cls, p, q, r) -> MeroFunction:
        """Build from a denominator given by coefficients; repeated roots are clustered."""
        r = polys.trim(r)
        roots = np.polynomial.polynomial.polyroots(r) if r.size > 1 else []
        poles = polys.cluster_roots(roots, 1e-6)
        scale = complex(r[-1])
        return cls.build(polys.as_poly(p) / scale, polys.as_poly(q) / scale, poles)

    @classmethod
    def constant(cls, value: complex = 1.0) -> MeroFunction:
        return cls.build([value], [0.0])

    @property
    def r(self) -> np.ndarray:
        return polys.from_poles(self.poles)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.p) and not np.any(self.q)

    def __call__(self, point: CurvePoint) -> complex:
        num = polys.evaluate(self.p, point.x) + polys.evaluate(self.q, point.x) * point.y
        return complex(num / polys.evaluate(self.r, point.x))

    def _binary(self, other: MeroFunction, sign: float) -> MeroFunction:
        target = _combine_poles(self.poles, other.poles)
        p1, q1 = _lift([self.p, self.q], self.poles, target)
        p2, q2 = _lift([other.p, other.q], other.poles, target)
        return MeroFunction.build(polys.add(p1, sign * p2), polys.add(q1, sign * q2), target)

    def __add__(self, other):
        if isinstance(other, Number):
            other = MeroFunction.constant(other)
        return self._binary(other, 1.0) if isinstance(other, MeroFunction) else NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Number):
            other = MeroFunction.constant(other)
        return self._binary(other, -1.0) if isinstance(other, MeroFunction) else NotImplemented

    def __mul__(self, other):
        if isinstance(other, Number):
            return MeroFunction.build(self.p * other, self.q * other, self.poles)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self) -> str:
        return f"MeroFunction(p={np.round(self.p, 6)}, q={np.round(self.q, 6)}, poles={self.poles})"


@dataclass(frozen=True, eq=False)
class Differential:
    """w = (a(x) + b(x) y) / c(x) dx, c = prod (x - root)^mult."""

    __array_ufunc__ = None

    a: np.ndarray
    b: np.ndarray
    poles: Poles = ()
    kind: Kind = "general"

    @classmethod
    def build(cls, a, b, poles: Poles = (), kind: Kind = "general") -> Differential:
        (a, b), poles = _canonical([polys.as_poly(a), polys.as_poly(b)], tuple(poles))
        return cls(a, b, poles, kind)

    @classmethod
    def from_polys(cls, a, b, c, kind: Kind = "general") -> Differential:
        c = polys.trim(c)
        roots = np.polynomial.polynomial.polyroots(c) if c.size > 1 else []
        poles = polys.cluster_roots(roots, 1e-6)
        scale = complex(c[-1])
        return cls.build(polys.as_poly(a) / scale, polys.as_poly(b) / scale, poles, kind)

    @classmethod
    def zero(cls) -> Differential:
        return cls.build([0.0], [0.0], (), "first_kind")

    @property
    def c(self) -> np.ndarray:
        return polys.from_poles(self.poles)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.a) and not np.any(self.b)

    def __call__(self, point: CurvePoint) -> complex:
        """Value of w/dx at a finite point."""
        num = polys.evaluate(self.a, point.x) + polys.evaluate(self.b, point.x) * point.y
        return complex(num / polys.evaluate(self.c, point.x))

    def with_kind(self, kind: Kind) -> Differential:
        return Differential(self.a, self.b, self.poles, kind)

    def _binary(self, other: Differential, sign: float) -> Differential:
        target = _combine_poles(self.poles, other.poles)
        a1, b1 = _lift([self.a, self.b], self.poles, target)
        a2, b2 = _lift([other.a, other.b], other.poles, target)
        kind = self.kind if self.kind == other.kind else "general"
        if {self.kind, other.kind} == {"first_kind", "second_kind"}:
            kind = "second_kind"
        return Differential.build(polys.add(a1, sign * a2), polys.add(b1, sign * b2), target, kind)

    def __add__(self, other):
        return self._binary(other, 1.0) if isinstance(other, Differential) else NotImplemented

    def __sub__(self, other):
        return self._binary(other, -1.0) if isinstance(other, Differential) else NotImplemented

    def __mul__(self, other):
        if isinstance(other, Number):
            return Differential.build(self.a * other, self.b * other, self.poles, self.kind)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self) -> str:
        return f"Differential(a={np.round(self.a, 6)}, b={np.round(self.b, 6)}, poles={self.poles}, kind={self.kind})"


def linear_combination(coeffs: Iterable[complex], items: Sequence[Differential]) -> Differential:
    terms = [w * complex(c) for c, w in zip(coeffs, items)]
    return reduce(lambda u, v: u + v, terms)


def function_times_differential(curve: Curve, f: MeroFunction, w: Differential) -> Differential:
    """f * w, reducing y^2 through P."""
    a = polys.add(polys.mul(f.p, w.a), polys.mul(polys.mul(f.q, w.b), curve.pcoeffs))
    b = polys.add(polys.mul(f.p, w.b), polys.mul(f.q, w.a))
    return Differential.build(a, b, _combine_poles(f.poles, w.poles, "sum"))


# expansions
def _expand(curve: Curve, numerators, poles: Poles, place: Place, order: int, with_dx: bool) -> LaurentSeries:
    chart = chart_at(curve, place)
    top, bottom = numerators
    total = sum(m for _, m in poles)
    n = max(order, 0) + 2 * total + 2 * curve.genus + 4
    for _ in range(8):
        num = chart.poly(top, n) + chart.poly(bottom, n) * chart.y(n)
        den = LaurentSeries(0, [1.0], n)
        for root, mult in poles:
            den = den * chart.linear_factor(root, n) ** mult
        res = num / den
        if with_dx:
            res = res * chart.dx(n)
        if res.trunc >= order:
            return res.truncate(order)
        n += order - res.trunc + 2
    raise EmptyPrecision(f"could not reach truncation order {order} at {place}")


def local_expansion(curve: Curve, w: Differential, place: Place, order: int | None = None) -> LaurentSeries:
    """w / d(local parameter) at any place, including branch points and infinity."""
    order = settings.series_order if order is None else order
    return _expand(curve, (w.a, w.b), w.poles, place, order, with_dx=True)


def local_function_expansion(curve: Curve, f: MeroFunction, place: Place, order: int | None = None) -> LaurentSeries:
    order = settings.series_order if order is None else order
    return _expand(curve, (f.p, f.q), f.poles, place, order, with_dx=False)


def _ordinary(curve: Curve, p: CurvePoint) -> CurvePoint:
    if p is INFINITY or curve.is_branch(p):
        raise BranchPoint(f"{p} is not an ordinary point of {curve}; z = x - x(P) is not a local coordinate there")
    return p


def expand_differential(curve: Curve, w: Differential, p: CurvePoint, order: int | None = None) -> LaurentSeries:
    """Laurent series of w/dz in z = x - p.x, accurate through z^(order-1)."""
    return local_expansion(curve, w, _ordinary(curve, p), order)


def expand_function(curve: Curve, f: MeroFunction, p: CurvePoint, order: int | None = None) -> LaurentSeries:
    return local_function_expansion(curve, f, _ordinary(curve, p), order)


def residue_at(curve: Curve, w: Differential, place: Place) -> complex:
    return local_expansion(curve, w, place, order=0).residue()


def candidate_places(curve: Curve, *objects: Union[Differential, MeroFunction]) -> list[Place]:
    """All places where any of the objects can have a pole, infinity last.

    A denominator root off the branch locus contributes both points above
    it; extra places contribute nothing to residue sums.
    """
    places: list[Place] = []

    def add(place: Place) -> None:
        if not any(place is INFINITY and q is INFINITY or
                   place is not INFINITY and q is not INFINITY and same_place(place, q) for q in places):
            places.append(place)

    for obj in objects:
        for root, _ in obj.poles:
            idx, dist = curve.nearest_branch(root)
            if dist <= settings.separation_tol * (1.0 + abs(root)):
                add(CurvePoint(complex(curve.branch_x[idx]), 0j))
            else:
                add(curve.point(root, 1))
                add(curve.point(root, -1))
    add(INFINITY)
    return places


def principal_scale(series: LaurentSeries) -> float:
    neg = [abs(series.coeff(e)) for e in range(series.lead, min(0, series.trunc))]
    return max([1.0] + neg)


def pole_order_at(curve: Curve, w: Union[Differential, MeroFunction], place: Place, tol: float | None = None) -> int:
    """Order of the pole at ``place`` (0 when regular), ignoring noise-level leading terms."""
    tol = settings.residue_tol if tol is None else tol
    if isinstance(w, Differential):
        e = local_expansion(curve, w, place, order=0)
    else:
        e = local_function_expansion(curve, w, place, order=0)
    scale = principal_scale(e)
    for exponent in range(e.lead, 0):
        if abs(e.coeff(exponent)) > tol * scale:
            return -exponent
    return 0


def is_second_kind(curve: Curve, w: Differential, tol: float | None = None) -> bool:
    tol = settings.residue_tol if tol is None else tol
    for place in candidate_places(curve, w):
        e = local_expansion(curve, w, place, order=0)
        if abs(e.residue()) > tol * principal_scale(e):
            return False
    return True


def classify(curve: Curve, w: Differential) -> Kind:
    """Recompute the kind flag from local expansions."""
    places = candidate_places(curve, w)
    if all(pole_order_at(curve, w, place) == 0 for place in places):
        return "first_kind"
    return "second_kind" if is_second_kind(curve, w) else "general"


def exterior_derivative(curve: Curve, f: MeroFunction) -> Differential:
    """df, with y' = P'(x) / (2y) = P'(x) y / (2 P(x))."""
    r = f.r
    dr = polys.derivative(r)
    P, dP, lc = curve.pcoeffs, curve.dpcoeffs, curve.leading
    dp_part = polys.sub(polys.mul(polys.derivative(f.p), r), polys.mul(f.p, dr))
    dq_part = polys.sub(polys.mul(polys.derivative(f.q), r), polys.mul(f.q, dr))
    a = polys.mul(P, dp_part) / lc
    b = polys.add(2.0 * polys.mul(P, dq_part), polys.mul(polys.mul(f.q, r), dP)) / (2.0 * lc)
    branch = tuple((complex(e), 1) for e in curve.branch_x)
    doubled = tuple((root, 2 * m) for root, m in f.poles)
    return Differential.build(a, b, _combine_poles(doubled, branch, "sum"), "second_kind")


def holomorphic_basis(curve: Curve) -> list[Differential]:
    """x^(k-1) dx / y for k = 1..g, written as x^(k-1) y / P dx."""
    branch = tuple((complex(e), 1) for e in curve.branch_x)
    return [
        Differential.build([0.0], polys.monomial(k, 1.0 / curve.leading), branch, "first_kind")
        for k in range(curve.genus)
    ]


def dx_over_y(curve: Curve) -> Differential:
    return holomorphic_basis(curve)[0]


def is_nonspecial(curve: Curve, d: Divisor) -> bool:
    """No holomorphic differential vanishes on d (rank test on the non-speciality matrix)."""
    check_admissible(curve, d)
    basis = holomorphic_basis(curve)
    rows = []
    for p, m in d.points:
        if m == 1:
            rows.append([w(p) for w in basis])
        else:
            expansions = [expand_differential(curve, w, p, order=m) for w in basis]
            rows.extend([e.coeff(j) for e in expansions] for j in range(m))
    matrix = np.array(rows, dtype=complex)
    rank = linalg.numerical_rank(matrix, what=f"non-speciality matrix of {d}")
    logger.debug(f"non-speciality rank of {d}: {rank} of {curve.genus}")
    return rank == curve.genus


def _group_by_x(points: Sequence[tuple[CurvePoint, int]]) -> list[tuple[complex, list[tuple[CurvePoint, int]]]]:
    groups: list[tuple[complex, list[tuple[CurvePoint, int]]]] = []
    for p, m in points:
        for gx, members in groups:
            if abs(gx - p.x) <= settings.separation_tol * (1.0 + abs(gx)):
                members.append((p, m))
                break
        else:
            groups.append((p.x, [(p, m)]))
    return groups


def rr_space(curve: Curve, d: Divisor) -> list[MeroFunction]:
    """Basis of L(d) = {f : (f) + d >= 0}; the constant function comes first.

    Ansatz f = (p + q y) / prod (x - x_i)^m_i with degree bounds from the
    pole order allowed at infinity, plus vanishing of the numerator at the
    conjugates of the support. The non-constant elements are normalized to
    vanish at infinity (coefficient of x^M in p is zero) and orthonormalized.
    """
    check_admissible(curve, d, allow_infinity=True)
    g = curve.genus
    m_inf = d.multiplicity(INFINITY)
    finite = [(p, m) for p, m in d.points if p is not INFINITY]
    groups = _group_by_x(finite)
    poles = tuple((complex(gx), sum(m for _, m in members)) for gx, members in groups)
    M = sum(m for _, m in poles)
    deg_p = M + m_inf // 2
    deg_q = (2 * M + m_inf - 2 * g - 1) // 2
    n_p, n_q = deg_p + 1, max(deg_q + 1, 0)

    rows = []
    for (gx, members), (_, total) in zip(groups, poles):
        eta = members[0][0].y
        for sheet in (eta, -eta):
            own = sum(m for p, m in members if abs(p.y - sheet) <= settings.separation_tol * (1.0 + abs(sheet)))
            need = total - own
            if need <= 0:
                continue
            chart = OrdinaryChart(curve, CurvePoint(complex(gx), sheet))
            y = chart.y(need)
            cols = [chart.poly(polys.monomial(j), need).window(0, need) for j in range(n_p)]
            cols += [(chart.poly(polys.monomial(j), need) * y).window(0, need) for j in range(n_q)]
            rows.extend(np.array(cols).T)
    constraints = np.array(rows, dtype=complex).reshape(-1, n_p + n_q)

    kernel = linalg.nullspace(constraints, what=f"L({d}) constraints")
    normal = np.zeros((1, n_p + n_q), dtype=complex)
    normal[0, M] = 1.0
    reduced = linalg.nullspace(np.vstack([constraints, normal]), what=f"L({d}) constraints at infinity")
    if reduced.shape[1] != kernel.shape[1] - 1:
        raise RankDeficiency(f"constants are not split off cleanly in L({d}): dimensions {kernel.shape[1]} and {reduced.shape[1]}")
    basis = linalg.canonical_basis(reduced)
    logger.debug(f"dim L({d}) = {kernel.shape[1]}")
    functions = [MeroFunction.constant(1.0)]
    for v in basis.T:
        q = v[n_p:] if n_q else np.zeros(1, dtype=complex)
        functions.append(MeroFunction.build(v[:n_p], q, poles))
    return functions


def ensure_admissible_pole(curve: Curve, w: Differential, place: Place) -> None:
    """Poles at branch points are outside the supported divisor model."""
    if place is not INFINITY and curve.is_branch(place) and pole_order_at(curve, w, place) > 0:
        raise InadmissibleSupport(f"{w} has a pole at the branch point {place}")
