"""Randomized property suite behind the ``verify`` command."""
from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from config import settings
from models.errors import DeRhamError
from models.schemas import PropertyResult
from services import sampling
from services.curve import INFINITY, Curve, CurvePoint, Divisor, make_curve
from services.derham import (
    gram_matrix,
    omega_pairing,
    reduce_modulo_exact,
    second_kind_space,
    standard_symplectic,
    symplectic_basis,
)
from services.flow import (
    PrincipalPartSpec,
    abel_velocity,
    baker_akhiezer,
    build_m_function,
    decompose_df,
    integrate_flow,
    restart,
)
from services.funcfield import (
    candidate_places,
    exterior_derivative,
    function_times_differential,
    holomorphic_basis,
    pole_order_at,
    residue_at,
    rr_space,
)
from services.series import LaurentSeries

logger = logging.getLogger(__name__)

GENERA = (1, 2, 3)


def _result(name: str, errors: list[float], tol: float, detail: str = "") -> PropertyResult:
    worst = float(max(errors)) if errors else 0.0
    passed = bool(errors) and worst < tol
    logger.info(f"{name}: {'passed' if passed else 'FAILED'} (max error {worst:.3e}, tolerance {tol:.1e})")
    return PropertyResult(name=name, passed=passed, max_error=worst, detail=detail)


def _guarded(name: str, check: Callable[[], PropertyResult]) -> PropertyResult:
    try:
        return check()
    except DeRhamError as e:
        logger.warning(f"{name} raised {type(e).__name__}: {e}")
        # max_error -1 marks a check that stopped before measuring anything
        return PropertyResult(name=name, passed=False, max_error=-1.0, detail=f"{type(e).__name__}: {e}")
    except Exception as e:
        logger.exception(f"{name} crashed")
        return PropertyResult(name=name, passed=False, max_error=-1.0, detail=f"unexpected {type(e).__name__}: {e}")


def _instances(rng: np.random.Generator, count: int) -> list[tuple[Curve, Divisor, Divisor]]:
    out = []
    for g in GENERA:
        for _ in range(count):
            curve = sampling.random_curve(rng, g)
            d = sampling.random_divisor(rng, curve)
            d0 = sampling.random_divisor(rng, curve, avoid=[p.x for p in d.support])
            out.append((curve, d, d0))
    return out


def check_dimensions(instances) -> PropertyResult:
    errors = []
    for curve, d, d0 in instances:
        g = curve.genus
        errors.append(abs(len(second_kind_space(curve, d)) - 2 * g))
        errors.append(abs(len(rr_space(curve, d + d0)) - (g + 1)))
    return _result("dimension", errors, 0.5, f"{len(instances)} instances, genera {GENERA}")


def check_symplectic(instances) -> PropertyResult:
    errors = []
    for curve, d, _ in instances:
        gram = gram_matrix(symplectic_basis(curve, d))
        errors.append(float(np.max(np.abs(gram - standard_symplectic(curve.genus)))))
    return _result("symplectic_gram", errors, 1e-8, "Gram matrix of (theta, tau) against [[0, I], [-I, 0]]")


def check_series_residues(rng: np.random.Generator, count: int = 100) -> PropertyResult:
    """Res(f1 df2) = -Res(f2 df1) for random truncated Laurent series."""
    errors = []
    for _ in range(count):
        f1 = LaurentSeries(int(rng.integers(-3, 1)), sampling.random_coeffs(rng, 8), 6)
        f2 = LaurentSeries(int(rng.integers(-3, 1)), sampling.random_coeffs(rng, 8), 6)
        errors.append(abs((f1 * f2.derivative()).residue() + (f2 * f1.derivative()).residue()))
    return _result("series_residue_antisymmetry", errors, 1e-10, f"{count} random series pairs")


def check_skew_symmetry(rng: np.random.Generator, instances) -> PropertyResult:
    errors = []
    for curve, d, _ in instances:
        avoid = [p.x for p in d.support]
        w1 = sampling.random_second_kind(rng, curve, avoid)
        w2 = sampling.random_second_kind(rng, curve, avoid)
        f = sampling.random_function(rng, curve, 2, avoid)
        errors.append(abs(omega_pairing(curve, w1, w2) + omega_pairing(curve, w2, w1)))
        errors.append(abs(omega_pairing(curve, exterior_derivative(curve, f), w1)))
    return _result("pairing_skew_symmetry", errors, 1e-9, "skew-symmetry and vanishing on exact forms")


def check_global_residues(rng: np.random.Generator, instances) -> PropertyResult:
    errors = []
    for curve, d, _ in instances:
        f = sampling.random_function(rng, curve, 2, [p.x for p in d.support])
        for w in holomorphic_basis(curve):
            fw = function_times_differential(curve, f, w)
            errors.append(abs(sum(residue_at(curve, fw, place) for place in candidate_places(curve, fw))))
    return _result("global_residue_sum", errors, 1e-9, "sum of residues of f * omega over all places, infinity included")


def check_reduction(rng: np.random.Generator, instances) -> PropertyResult:
    errors = []
    for curve, d, _ in instances:
        theta = sampling.random_second_kind(rng, curve, [p.x for p in d.support])
        reduced, _ = reduce_modulo_exact(curve, theta, d)
        for place in candidate_places(curve, reduced):
            allowed = 2 * d.multiplicity(place) if place is not INFINITY else 0
            errors.append(float(max(0, pole_order_at(curve, reduced, place) - allowed)))
        for eta in holomorphic_basis(curve):
            errors.append(abs(omega_pairing(curve, theta, eta) - omega_pairing(curve, reduced, eta)))
    return _result("reduction", errors, 1e-8, "pole orders bounded by 2D and pairings with holomorphic forms preserved")


def flow_fixture() -> tuple[Curve, Divisor, Divisor, PrincipalPartSpec]:
    """Genus 2: y^2 = x^5 - 1 with D and D0 well away from the branch points."""
    curve = make_curve([-1, 0, 0, 0, 0, 1])
    d = Divisor.of([curve.point(2.0 + 0.5j, 1), curve.point(-1.5 + 1.0j, 1)])
    d0 = Divisor.of([curve.point(0.3 + 2.0j, 1), curve.point(-2.0 - 1.5j, 1)])
    return curve, d, d0, PrincipalPartSpec.of([0.2, 0.1j])


def check_flow_linearity(steps: int, t_end: float = 1.0) -> PropertyResult:
    curve, d, d0, pp = flow_fixture()
    f, _ = build_m_function(curve, d, d0, pp)
    slope = abel_velocity(curve, f, d0)
    traj = integrate_flow(curve, d, d0, pp, t_end, steps)
    errors = [abs(s.abel[k] - slope[k] * s.t) for s in traj.states for k in range(curve.genus)]
    defect = traj.max_defect()
    errors.append(defect if defect >= 1e-8 else 0.0)
    return _result("flow_abel_linearity", errors, 1e-6, f"slope {slope.tolist()}, max on-curve defect {defect:.3e}")


def check_baker_akhiezer(steps: int, t_end: float = 1.0) -> PropertyResult:
    curve, d, d0, pp = flow_fixture()
    samples = [curve.point(1.0 + 1.5j, 1), curve.point(-0.5 - 2.0j, -1)]
    errors = []
    still = integrate_flow(curve, d, d0, pp, 0.0, steps, samples)
    errors.extend(abs(baker_akhiezer(still, k) - 1.0) for k in range(len(samples)))
    half = max(steps // 2, 1)
    whole = integrate_flow(curve, d, d0, pp, t_end, 2 * half, samples)
    first = integrate_flow(curve, d, d0, pp, t_end / 2, half, samples)
    second = restart(first, t_end / 2, half)
    for k in range(len(samples)):
        joined = baker_akhiezer(first, k) * baker_akhiezer(second, k)
        errors.append(abs(baker_akhiezer(whole, k) - joined) / abs(joined))
    return _result("baker_akhiezer", errors, 1e-6, "Psi = 1 at T = 0 and multiplicativity across a midpoint restart")


def on_curve(curve: Curve, points) -> Divisor:
    return Divisor.of([curve.project(p.x, p.y) for p in points])


def check_rk4_order(steps: int = 20, t_end: float = 1.0) -> PropertyResult:
    """Halving the step divides the on-curve defect by about 2^4."""
    curve, d, d0, pp = flow_fixture()
    coarse = integrate_flow(curve, d, d0, pp, t_end, steps, defect_tol=np.inf).max_defect()
    fine = integrate_flow(curve, d, d0, pp, t_end, 2 * steps, defect_tol=np.inf).max_defect()
    ratio = coarse / fine
    return _result("flow_rk4_order", [abs(ratio - 16.0)], 4.0, f"defect {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2f}")


def check_time_scaling(steps: int = 50, t_end: float = 0.5, scale: float = 2.0) -> PropertyResult:
    """The flow of scale * pp up to t_end / scale ends where the flow of pp ends at t_end."""
    curve, d, d0, pp = flow_fixture()
    fast = integrate_flow(curve, d, d0, pp.scaled(scale), t_end / scale, steps).final.points
    slow = integrate_flow(curve, d, d0, pp, t_end, steps).final.points
    errors = [abs(a.x - b.x) for a, b in zip(fast, slow)]
    return _result("flow_time_scaling", errors, 1e-7, f"pp scaled by {scale:g}")


def check_residue_identity(steps: int, t_end: float = 1.0, checkpoints: int = 4) -> PropertyResult:
    """omega(theta_k, tau(t)) = -sum over D(t) of Res(f_t theta_k) along a trajectory."""
    curve, d, d0, pp = flow_fixture()
    traj = integrate_flow(curve, d, d0, pp, t_end, steps)
    errors = []
    for state in traj.states[::max(1, len(traj.states) // checkpoints)]:
        dt = on_curve(curve, state.points)
        f, _ = build_m_function(curve, dt, d0, pp)
        basis = symplectic_basis(curve, dt)
        tau, _ = decompose_df(curve, f, dt, d0, basis)
        for theta in basis.theta:
            direct = -sum(residue_at(curve, function_times_differential(curve, f, theta), p) for p in dt.support)
            errors.append(abs(omega_pairing(curve, theta, tau) - direct))
    return _result("flow_residue_identity", errors, 1e-8, f"{checkpoints} checkpoints up to t = {t_end:g}")


def near(curve: Curve, p: CurvePoint, direction: complex, eps: float) -> CurvePoint:
    """Point on the sheet of p whose x-coordinate is eps away from x(p) along ``direction``."""
    return curve.project(p.x + eps * direction / abs(direction), p.y)


def psi_local_ratios(steps: int = 1000, t_end: float = 0.5, eps: tuple[float, float] = (1e-2, 1e-3)) -> tuple[float, float]:
    """|Psi| eps near D(0) and |Psi| / eps near D(T), each compared across the two eps.

    Samples are offset across the direction of motion so the trajectory
    does not run through them.
    """
    curve, d, d0, pp = flow_fixture()
    end = on_curve(curve, integrate_flow(curve, d, d0, pp, t_end, steps).final.points)
    _, alpha0 = build_m_function(curve, d, d0, pp)
    _, alpha_end = build_m_function(curve, end, d0, pp)
    start_point, end_point = d.support[0], end.support[0]
    samples = [near(curve, start_point, -1j * alpha0[0], e) for e in eps]
    samples += [near(curve, end_point, -1j * alpha_end[0], e) for e in eps]
    traj = integrate_flow(curve, d, d0, pp, t_end, steps, samples)
    psi = [abs(baker_akhiezer(traj, k)) for k in range(len(samples))]
    pole = (psi[0] * eps[0]) / (psi[1] * eps[1])
    zero = (psi[2] / eps[0]) / (psi[3] / eps[1])
    return pole, zero


def check_psi_divisor(steps: int = 1000) -> PropertyResult:
    pole, zero = psi_local_ratios(steps)
    errors = [abs(np.log(pole)), abs(np.log(zero))]
    return _result("baker_akhiezer_divisor", errors, float(np.log(1.5)),
                   f"simple pole at D(0) (ratio {pole:.3f}) and simple zero at D(T) (ratio {zero:.3f})")


def check_fixture(curve: Curve, d: Divisor) -> PropertyResult:
    gram = gram_matrix(symplectic_basis(curve, d))
    err = float(np.max(np.abs(gram - standard_symplectic(curve.genus))))
    return _result("fixture_gram", [err], 1e-8, f"Gram matrix on {d}")


def run_suite(seed: int, steps: int = 1000, instances: Optional[int] = None,
              fixture: Optional[tuple[Curve, Divisor]] = None) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    count = settings.verify_instances if instances is None else instances
    sample = _instances(rng, count)
    logger.info(f"property suite: seed {seed}, {len(sample)} random instances")
    small = sample[::max(1, count // 4)]
    results = [
        _guarded("dimension", lambda: check_dimensions(sample)),
        _guarded("symplectic_gram", lambda: check_symplectic(sample)),
        _guarded("series_residue_antisymmetry", lambda: check_series_residues(rng)),
        _guarded("pairing_skew_symmetry", lambda: check_skew_symmetry(rng, small)),
        _guarded("global_residue_sum", lambda: check_global_residues(rng, small)),
        _guarded("reduction", lambda: check_reduction(rng, small)),
        _guarded("flow_abel_linearity", lambda: check_flow_linearity(steps)),
        _guarded("baker_akhiezer", lambda: check_baker_akhiezer(min(steps, 200))),
        _guarded("flow_rk4_order", check_rk4_order),
        _guarded("flow_time_scaling", check_time_scaling),
        _guarded("flow_residue_identity", lambda: check_residue_identity(200)),
        _guarded("baker_akhiezer_divisor", check_psi_divisor),
    ]
    if fixture is not None:
        results.append(_guarded("fixture_gram", lambda: check_fixture(*fixture)))
    return results
