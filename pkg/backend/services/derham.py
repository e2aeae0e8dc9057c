"""Residue pairing, second-kind spaces and symplectic bases."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from config import settings
from models.errors import (
    InadmissibleSupport,
    NonzeroResidue,
    NotSecondKind,
    RankDeficiency,
    SpecialDivisor,
)
from services.curve import (
    COORDINATE_CONVENTION,
    INFINITY,
    Curve,
    CurvePoint,
    Divisor,
    OrdinaryChart,
    check_admissible,
    check_distinguished,
)
from services.funcfield import (
    Differential,
    MeroFunction,
    candidate_places,
    exterior_derivative,
    expand_differential,
    is_nonspecial,
    is_second_kind,
    linear_combination,
    local_expansion,
    pole_order_at,
    principal_scale,
    rr_space,
)
from services.series import LaurentSeries
from utils import linalg, polys

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SymplecticBasis:
    curve: Curve
    d: Divisor
    theta: list[Differential]
    tau: list[Differential]
    coord_note: str = COORDINATE_CONVENTION

    @property
    def elements(self) -> list[Differential]:
        """Basis order used for Gram matrices: theta_1..theta_g, tau_1..tau_g."""
        return [*self.theta, *self.tau]

    @property
    def points(self) -> list[CurvePoint]:
        return self.d.support


def validate_divisor(curve: Curve, d: Divisor, distinct: bool = True) -> None:
    """Admissible, degree g, non-special and (optionally) with distinct x-coordinates."""
    check_admissible(curve, d)
    if d.degree != curve.genus:
        raise InadmissibleSupport(f"divisor {d} has degree {d.degree}, expected the genus {curve.genus}")
    if not is_nonspecial(curve, d):
        raise SpecialDivisor(f"divisor {d} is special: a holomorphic differential vanishes on it")
    if distinct:
        check_distinguished(curve, d)


def _local_pairing(w1: Differential, e1: LaurentSeries, e2: LaurentSeries, place) -> complex:
    """Res(F1 * e2) where F1 is the primitive of e1 with zero constant term."""
    try:
        primitive = e1.antiderivative(settings.residue_tol * principal_scale(e1))
    except NonzeroResidue as e:
        raise NotSecondKind(f"{w1} is not of the second kind at {place}: {e}") from e
    return (primitive * e2).residue()


def omega_pairing(curve: Curve, w1: Differential, w2: Differential) -> complex:
    """Sum over all candidate poles of Res(F1 * w2), with dF1 = w1 locally."""
    total = 0j
    for place in candidate_places(curve, w1, w2):
        e1 = local_expansion(curve, w1, place, order=0)
        e2 = local_expansion(curve, w2, place, order=0)
        l1, l2 = min(e1.lead, 0), min(e2.lead, 0)
        if l1 == 0 and l2 == 0:
            continue
        e1 = local_expansion(curve, w1, place, order=max(1, -l2))
        e2 = local_expansion(curve, w2, place, order=max(1, -l1))
        total += _local_pairing(w1, e1, e2, place)
    return complex(total)


def pairing_matrix(curve: Curve, elements: list[Differential]) -> np.ndarray:
    """omega(elements[i], elements[j]) for all i, j, expanding each element once per place."""
    n = len(elements)
    out = np.zeros((n, n), dtype=complex)
    for place in candidate_places(curve, *elements):
        leads = [min(local_expansion(curve, w, place, order=0).lead, 0) for w in elements]
        depth = -min(leads)
        if depth == 0:
            continue
        series = [local_expansion(curve, w, place, order=max(1, depth)) for w in elements]
        for i in range(n):
            for j in range(n):
                if i != j and (leads[i] < 0 or leads[j] < 0):
                    out[i, j] += _local_pairing(elements[i], series[i], series[j], place)
    return out


def _ansatz_rows(curve: Curve, xs: list[complex], point: CurvePoint, exponents: range, deg_a: int, deg_b: int) -> np.ndarray:
    """Coefficients of z^e in (x^k / y) dx / prod (x - x_j)^2 and x^k dx / prod (x - x_j)^2."""
    chart = OrdinaryChart(curve, point)
    n = exponents.stop + 2 * len(xs) + 2
    den = LaurentSeries(0, [1.0], n)
    for xj in xs:
        den = den * chart.linear_factor(xj, n) ** 2
    inv_den = den.inverse()
    inv_y = chart.y(n).inverse()
    cols = []
    for k in range(deg_a + 1):
        cols.append((chart.poly(polys.monomial(k), n) * inv_y * inv_den).window(exponents.start, exponents.stop))
    for k in range(deg_b + 1):
        cols.append((chart.poly(polys.monomial(k), n) * inv_den).window(exponents.start, exponents.stop))
    return np.array(cols).T


def _ansatz_differential(curve: Curve, xs: list[complex], vec: np.ndarray, deg_a: int) -> Differential:
    """(A/y + B) dx / prod (x - x_j)^2 in canonical form: (B P/lc + A y/lc) / (P/lc prod (x - x_j)^2)."""
    A, B = vec[: deg_a + 1], vec[deg_a + 1:]
    lc = curve.leading
    branch = tuple((complex(e), 1) for e in curve.branch_x)
    double = tuple((complex(x), 2) for x in xs)
    poles = polys.merge_poles(branch, double, settings.separation_tol, "sum")
    return Differential.build(polys.mul(B, curve.pcoeffs) / lc, A / lc, poles, "second_kind")


def second_kind_space(curve: Curve, d: Divisor) -> list[Differential]:
    """Basis of the second-kind differentials with at most double poles on d (2g elements).

    Ordered by point of d, then by pole order: element 2i is regular at
    P_i with constant term 1, element 2i + 1 has z^-2 coefficient 1 there,
    and every other normalization at d vanishes.
    """
    validate_divisor(curve, d)
    g = curve.genus
    deg_a, deg_b = 3 * g - 1, 2 * g - 2
    xs = [p.x for p in d.support]
    blocks = []
    for p in d.support:
        blocks.append(_ansatz_rows(curve, xs, curve.conjugate(p), range(-2, 0), deg_a, deg_b))
        blocks.append(_ansatz_rows(curve, xs, p, range(-1, 0), deg_a, deg_b))
    constraints = np.vstack(blocks)
    kernel = linalg.nullspace(constraints, what=f"second-kind ansatz on 2({d})")
    if kernel.shape[1] != 2 * g:
        raise RankDeficiency(f"second-kind space on 2({d}) has dimension {kernel.shape[1]}, expected {2 * g}")
    raw = [_ansatz_differential(curve, xs, v, deg_a) for v in linalg.canonical_basis(kernel).T]
    L = np.array([coefficient_map(curve, w, d) for w in raw])
    C = linalg.conditioned_solve(L.T, np.eye(2 * g, dtype=complex), what=f"coefficient map on {d}")
    return [
        linear_combination(C[:, m], raw).with_kind("first_kind" if m % 2 == 0 else "second_kind")
        for m in range(2 * g)
    ]


def coefficient_map(curve: Curve, w: Differential, d: Divisor) -> np.ndarray:
    """(alpha_1, beta_1, ..., alpha_g, beta_g): constant and z^-2 coefficients at each point of d."""
    out = []
    for p in d.support:
        e = expand_differential(curve, w, p, order=1)
        out.extend([e.coeff(0), e.coeff(-2)])
    return np.array(out, dtype=complex)


def symplectic_basis(curve: Curve, d: Divisor) -> SymplecticBasis:
    validate_divisor(curve, d)
    space = second_kind_space(curve, d)
    g = curve.genus
    L = np.array([coefficient_map(curve, w, d) for w in space])
    # row j of L holds the normalizations of space[j]; column m of C combines them into e_m
    C = linalg.conditioned_solve(L.T, np.eye(2 * g, dtype=complex), what=f"coefficient map on {d}")
    theta = [linear_combination(C[:, 2 * i], space).with_kind("first_kind") for i in range(g)]
    tau = [linear_combination(C[:, 2 * i + 1], space).with_kind("second_kind") for i in range(g)]
    logger.info(f"symplectic basis built on {d} (genus {g})")
    return SymplecticBasis(curve, d, theta, tau)


def gram_matrix(basis: SymplecticBasis) -> np.ndarray:
    return pairing_matrix(basis.curve, basis.elements)


def standard_symplectic(g: int) -> np.ndarray:
    eye = np.eye(g)
    zero = np.zeros((g, g))
    return np.block([[zero, eye], [-eye, zero]])


def dual_second_kind(basis: SymplecticBasis, b) -> Differential:
    """sum b_i tau_i, the second-kind differential pairing to b_i with theta_i."""
    b = np.asarray(b, dtype=complex)
    if b.size != len(basis.tau):
        raise InadmissibleSupport(f"expected {len(basis.tau)} pairings, got {b.size}")
    return linear_combination(b, basis.tau).with_kind("second_kind")


def _match_principal_part(curve: Curve, theta_part: LaurentSeries, place, exponents: range, candidates: list[MeroFunction]) -> MeroFunction:
    target = theta_part.window(exponents.start, exponents.stop)
    cols = []
    for f in candidates:
        e = local_expansion(curve, exterior_derivative(curve, f), place, order=0)
        cols.append(e.window(exponents.start, exponents.stop))
    A = np.array(cols).T
    coef, *_ = scipy.linalg.lstsq(A, target)
    residual = np.linalg.norm(A @ coef - target)
    if residual > 1e-8 * (1.0 + np.linalg.norm(target)):
        raise RankDeficiency(f"principal part at {place} is not matched by exact forms (residual {residual:.3e})")
    f = MeroFunction.constant(0.0)
    for c, fi in zip(coef, candidates):
        f = f + fi * complex(c)
    return f


def reduce_modulo_exact(curve: Curve, theta: Differential, d: Divisor) -> tuple[Differential, MeroFunction]:
    """theta - df with poles at most 2d, and the function f used.

    Each pole Q of theta of order n beyond what 2d allows is removed with a
    function in L(d + (n-1)Q), matching the principal part of theta at Q.
    """
    validate_divisor(curve, d, distinct=False)
    if not is_second_kind(curve, theta):
        raise NotSecondKind(f"{theta} has a nonzero residue")
    f_total = MeroFunction.constant(0.0)
    for place in candidate_places(curve, theta):
        n = pole_order_at(curve, theta, place)
        m = d.multiplicity(place)
        if n <= 2 * m:
            continue
        if place is not INFINITY and curve.is_branch(place):
            raise InadmissibleSupport(f"{theta} has a pole at the branch point {place}")
        e = local_expansion(curve, theta, place, order=0)
        exponents = range(-(m + n), -max(2 * m + 1, 2) + 1)
        candidates = rr_space(curve, d + Divisor(((place, n - 1),)))[1:]
        logger.debug(f"reducing pole of order {n} at {place} with {len(candidates)} functions")
        f_total = f_total + _match_principal_part(curve, e, place, exponents, candidates)
    if f_total.is_zero:
        return theta, f_total
    reduced = (theta - exterior_derivative(curve, f_total)).with_kind("second_kind")
    return reduced, f_total
