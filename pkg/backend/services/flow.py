"""Divisor flows generated by functions with simple poles at D and D0.

For a fixed choice of residues c_i at the points Q_i of D0 there is a
function f in L(D + D0), unique up to constants, with f = c_i / z + O(1)
at Q_i. Its residues alpha_i at the points P_i of D drive the divisor by
x_i' = -alpha_i. Along the way the pullbacks of the first-kind half of
the symplectic basis attached to D0 and the values f_t(z) at sample
points are integrated, giving Abel coordinates and log Psi.
"""
from __future__ import annotations

import cmath
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from config import settings
from models.errors import (
    AllZeroPrincipalParts,
    BranchApproach,
    Collision,
    DivisorsNotDisjoint,
    FlowAborted,
    IllConditioned,
    InadmissibleSupport,
    OffCurve,
    SpecialDivisorOnPath,
    UnderdeterminedPrincipalParts,
    UnknownSample,
)
from services.curve import Curve, CurvePoint, Divisor, as_point
from services.derham import SymplecticBasis, coefficient_map, symplectic_basis, validate_divisor
from services.funcfield import (
    Differential,
    MeroFunction,
    exterior_derivative,
    function_times_differential,
    linear_combination,
    pole_order_at,
    residue_at,
)
from utils import linalg, polys

logger = logging.getLogger(__name__)

SCHEME = "rk4"


@dataclass(frozen=True)
class PrincipalPartSpec:
    """Residue c_i of f in z = x - x(Q_i) at each point Q_i of D0."""

    coeffs: tuple[complex, ...]

    @classmethod
    def of(cls, values: Sequence[complex]) -> PrincipalPartSpec:
        spec = cls(tuple(complex(v) for v in values))
        if all(c == 0 for c in spec.coeffs):
            raise AllZeroPrincipalParts("all principal parts at D0 are zero; the flow would be trivial")
        return spec

    def scaled(self, s: complex) -> PrincipalPartSpec:
        return PrincipalPartSpec.of([s * c for c in self.coeffs])


@dataclass(frozen=True, eq=False)
class MFunction:
    """f = (p + q y) / R with R = prod over D and D0 of (x - x_S), normalized by f(infinity) = 0."""

    p: np.ndarray
    q: np.ndarray
    xs: np.ndarray
    alpha: np.ndarray

    def __call__(self, point: CurvePoint) -> complex:
        num = polys.evaluate(self.p, point.x) + polys.evaluate(self.q, point.x) * point.y
        return complex(num / np.prod(point.x - self.xs))

    def as_mero(self) -> MeroFunction:
        return MeroFunction.build(self.p, self.q, tuple((complex(x), 1) for x in self.xs))


@dataclass(frozen=True)
class FlowState:
    t: float
    points: tuple[CurvePoint, ...]
    abel: tuple[complex, ...]
    logpsi: dict[int, complex] = field(default_factory=dict)

    @property
    def divisor(self) -> Divisor:
        return Divisor.of(self.points)


@dataclass(frozen=True, eq=False)
class Trajectory:
    curve: Curve
    d0: Divisor
    pp: PrincipalPartSpec
    states: list[FlowState]
    step: float
    samples: list[CurvePoint]
    scheme: str = SCHEME

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    @property
    def final_divisor(self) -> Divisor:
        return self.final.divisor

    def max_defect(self) -> float:
        return max(abs(p.y * p.y - self.curve.P(p.x)) for s in self.states for p in s.points)


def _check_disjoint(curve: Curve, d: Divisor, d0: Divisor) -> None:
    for p in d.support:
        for q in d0.support:
            if abs(p.x - q.x) <= settings.separation_tol * (1.0 + abs(q.x)):
                raise DivisorsNotDisjoint(f"D = {d} and D0 = {d0} share the x-coordinate {q.x:.6g}")


def _solve_m_function(curve: Curve, d_points: Sequence[CurvePoint], d0_points: Sequence[CurvePoint],
                      pp: PrincipalPartSpec, error=UnderdeterminedPrincipalParts) -> MFunction:
    """Square system for (p, q): deg p <= 2g, deg q <= g - 1.

    Rows: the numerator vanishes at the conjugate of every point of D and
    D0, the x^(2g) coefficient of p vanishes, and the residue at each Q_i
    is c_i.
    """
    g = curve.genus
    support = list(d_points) + list(d0_points)
    xs = np.array([s.x for s in support], dtype=complex)
    n_p, n_q = 2 * g + 1, g
    rows, rhs = [], []
    for s in support:
        rows.append(np.concatenate([s.x ** np.arange(n_p), -s.y * s.x ** np.arange(n_q)]))
        rhs.append(0j)
    normal = np.zeros(n_p + n_q, dtype=complex)
    normal[2 * g] = 1.0
    rows.append(normal)
    rhs.append(0j)

    def dR(i: int) -> complex:
        return complex(np.prod(np.delete(xs[i] - xs, i)))

    for j, (q, c) in enumerate(zip(d0_points, pp.coeffs)):
        i = g + j
        rows.append(np.concatenate([q.x ** np.arange(n_p), q.y * q.x ** np.arange(n_q)]) / dR(i))
        rhs.append(c)
    sol = linalg.conditioned_solve(np.array(rows), np.array(rhs), what="principal-part system", error=error)
    p, qc = sol[:n_p], sol[n_p:]
    alpha = np.array([
        (polys.evaluate(p, s.x) + polys.evaluate(qc, s.x) * s.y) / dR(i) for i, s in enumerate(d_points)
    ], dtype=complex)
    return MFunction(p, qc, xs, alpha)


def build_m_function(curve: Curve, d: Divisor, d0: Divisor, pp: PrincipalPartSpec) -> tuple[MeroFunction, np.ndarray]:
    """f in L(D + D0) with residue c_i at Q_i and f(infinity) = 0; alpha_i = residue at P_i."""
    validate_divisor(curve, d)
    validate_divisor(curve, d0)
    _check_disjoint(curve, d, d0)
    if len(pp.coeffs) != len(d0.support):
        raise InadmissibleSupport(f"{len(pp.coeffs)} principal parts given for the {len(d0.support)} points of D0 = {d0}")
    if all(c == 0 for c in pp.coeffs):
        raise AllZeroPrincipalParts("all principal parts at D0 are zero")
    m = _solve_m_function(curve, d.support, d0.support, pp)
    logger.debug(f"M-function on D = {d}, D0 = {d0}: alpha = {m.alpha}")
    return m.as_mero(), m.alpha


def decompose_df(curve: Curve, f: MeroFunction, d: Divisor, d0: Divisor,
                 basis: SymplecticBasis | None = None) -> tuple[Differential, Differential]:
    """df = tau - tau0 with tau in span(tau_1..tau_g) of the basis on D and tau0 regular on D."""
    basis = symplectic_basis(curve, d) if basis is None else basis
    df = exterior_derivative(curve, f)
    beta = coefficient_map(curve, df, d)[1::2]
    if not np.any(beta):
        zero = Differential.zero().with_kind("second_kind")
        return zero, (zero - df).with_kind("second_kind")
    tau = linear_combination(beta, basis.tau)
    tau0 = (tau - df).with_kind("second_kind")
    for p in d.support:
        if pole_order_at(curve, tau0, p) > 0:
            raise IllConditioned(f"tau0 keeps a pole at {p} after subtracting the principal parts of df")
    return tau.with_kind("second_kind"), tau0


def vector_field(curve: Curve, points: Sequence[CurvePoint], alpha) -> tuple[np.ndarray, np.ndarray]:
    """x_i' = -alpha_i and y_i' = P'(x_i) x_i' / (2 y_i)."""
    alpha = np.asarray(alpha, dtype=complex)
    xdot = -alpha
    ydot = np.array([
        curve.dP(p.x) * v / (2.0 * p.y) if v != 0 else 0j for p, v in zip(points, xdot)
    ], dtype=complex)
    return xdot, ydot


def abel_velocity(curve: Curve, f: MeroFunction, d0: Divisor, basis0: SymplecticBasis | None = None) -> np.ndarray:
    """Sum over D0 of Res(f theta_k): the constant rate of the Abel coordinates."""
    basis0 = symplectic_basis(curve, d0) if basis0 is None else basis0
    return np.array([
        sum(residue_at(curve, function_times_differential(curve, f, theta), q) for q in d0.support)
        for theta in basis0.theta
    ], dtype=complex)


class _Integrator:
    def __init__(self, curve: Curve, d0: Divisor, pp: PrincipalPartSpec, samples: Sequence[CurvePoint], basis0: SymplecticBasis):
        self.curve = curve
        self.d0_points = d0.support
        self.pp = pp
        self.samples = list(samples)
        self.theta = basis0.theta
        self.g = curve.genus

    def guard(self, xs: np.ndarray) -> None:
        tol = settings.collision_tol
        for i in range(self.g):
            for j in range(i + 1, self.g):
                if abs(xs[i] - xs[j]) < tol:
                    raise Collision(f"divisor points {i + 1} and {j + 1} collide near x = {xs[i]:.6g}")
            idx, dist = self.curve.nearest_branch(xs[i])
            if dist < tol:
                raise BranchApproach(f"divisor point {i + 1} reaches the branch point x = {self.curve.branch_x[idx]:.6g}")
            for q in self.d0_points:
                if abs(xs[i] - q.x) < tol:
                    raise Collision(f"divisor point {i + 1} runs into the D0 point {q}")

    def rhs(self, state: np.ndarray) -> np.ndarray:
        g = self.g
        xs, ys = state[:g], state[g:2 * g]
        self.guard(xs)
        points = [self.curve.project(x, y) for x, y in zip(xs, ys)]
        m = _solve_m_function(self.curve, points, self.d0_points, self.pp, error=SpecialDivisorOnPath)
        xdot, ydot = vector_field(self.curve, points, m.alpha)
        abel = np.array([sum(theta(p) * v for p, v in zip(points, xdot)) for theta in self.theta], dtype=complex)
        logpsi = np.array([m(z) for z in self.samples], dtype=complex)
        return np.concatenate([xdot, ydot, abel, logpsi])

    def snapshot(self, t: float, state: np.ndarray) -> FlowState:
        g = self.g
        points = tuple(CurvePoint(complex(x), complex(y)) for x, y in zip(state[:g], state[g:2 * g]))
        abel = tuple(complex(a) for a in state[2 * g:3 * g])
        logpsi = {k: complex(v) for k, v in enumerate(state[3 * g:])}
        return FlowState(float(t), points, abel, logpsi)


def integrate_flow(curve: Curve, d_init: Divisor, d0: Divisor, pp: PrincipalPartSpec, t_end: float, steps: int,
                   samples: Sequence[CurvePoint] = (), defect_tol: float | None = None) -> Trajectory:
    """Fixed-step RK4 for the divisor, its Abel coordinates and log Psi at the samples.

    A step that leaves a divisor point with |y^2 - P(x)| above ``defect_tol``
    (default ``settings.flow_defect_tol``) aborts the flow with OffCurve.
    """
    defect_tol = settings.flow_defect_tol if defect_tol is None else defect_tol
    if t_end < 0 or steps < 1:
        raise InadmissibleSupport(f"flow needs t_end >= 0 and steps >= 1, got t_end={t_end}, steps={steps}")
    validate_divisor(curve, d_init)
    validate_divisor(curve, d0)
    _check_disjoint(curve, d_init, d0)
    if len(pp.coeffs) != len(d0.support):
        raise InadmissibleSupport(f"{len(pp.coeffs)} principal parts given for the {len(d0.support)} points of D0 = {d0}")
    if all(c == 0 for c in pp.coeffs):
        raise AllZeroPrincipalParts("all principal parts at D0 are zero")
    for z in samples:
        as_point(curve, z)
        if curve.is_branch(z) or any(abs(z.x - q.x) <= settings.collision_tol for q in d0.support):
            raise InadmissibleSupport(f"sample {z} lies on a branch point or above a point of D0 = {d0}")

    integrator = _Integrator(curve, d0, pp, samples, symplectic_basis(curve, d0))
    g = curve.genus
    pts = d_init.support
    state = np.concatenate([
        [p.x for p in pts], [p.y for p in pts], np.zeros(g), np.zeros(len(samples)),
    ]).astype(complex)
    h = t_end / steps if t_end > 0 else 0.0
    states = [integrator.snapshot(0.0, state)]

    def partial() -> Trajectory:
        return Trajectory(curve, d0, pp, list(states), h, list(samples))

    if t_end == 0:
        return partial()
    t = 0.0
    for k in range(steps):
        try:
            k1 = integrator.rhs(state)
            k2 = integrator.rhs(state + 0.5 * h * k1)
            k3 = integrator.rhs(state + 0.5 * h * k2)
            k4 = integrator.rhs(state + h * k3)
        except FlowAborted as e:
            logger.warning(f"flow aborted at t = {t:.6g}: {e}")
            raise type(e)(f"{e} (t = {t:.6g})", trajectory=partial()) from e
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        defect = max(abs(y * y - curve.P(x)) for x, y in zip(state[:g], state[g:2 * g]))
        if defect > defect_tol:
            logger.warning(f"flow aborted at t = {(k + 1) * h:.6g}: on-curve defect {defect:.3e}")
            raise OffCurve(f"divisor left the curve: |y^2 - P(x)| = {defect:.3e} > {defect_tol:.1e} "
                           f"at t = {(k + 1) * h:.6g}; use more steps", trajectory=partial())
        t = (k + 1) * h
        states.append(integrator.snapshot(t, state))
    logger.info(f"flow finished: {steps} RK4 steps to t = {t_end:g}")
    return partial()


def restart(trajectory: Trajectory, t_end: float, steps: int, samples: Sequence[CurvePoint] | None = None) -> Trajectory:
    """Continue a flow from the final divisor of ``trajectory``."""
    samples = trajectory.samples if samples is None else samples
    return integrate_flow(trajectory.curve, trajectory.final_divisor, trajectory.d0, trajectory.pp, t_end, steps, samples)


def baker_akhiezer(trajectory: Trajectory, sample_id: int) -> complex:
    """Psi(z) = exp of the accumulated integral of f_t(z)."""
    logpsi = trajectory.final.logpsi
    if sample_id not in logpsi:
        raise UnknownSample(f"sample {sample_id} is not tracked (known: {sorted(logpsi)})")
    return cmath.exp(logpsi[sample_id])
