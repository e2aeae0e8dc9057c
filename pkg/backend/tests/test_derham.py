import numpy as np
import pytest

from models.errors import InadmissibleSupport, NotSecondKind, SpecialDivisor
from services.curve import INFINITY, Divisor, make_curve
from services.derham import (
    coefficient_map,
    dual_second_kind,
    gram_matrix,
    omega_pairing,
    pairing_matrix,
    reduce_modulo_exact,
    second_kind_space,
    standard_symplectic,
    symplectic_basis,
)
from services.funcfield import (
    Differential,
    MeroFunction,
    dx_over_y,
    exterior_derivative,
    holomorphic_basis,
    is_second_kind,
    pole_order_at,
)
from services.verification import flow_fixture

GENUS3_ROOTS = [-2.0, -1.2, -0.3 + 0.8j, 0.4, 0.9 - 0.7j, 1.5, 2.1 + 0.2j]


def curve_and_divisor(genus):
    if genus == 1:
        curve = make_curve([0, -1, 0, 1])
        return curve, Divisor.of([curve.point(2.0, 1)])
    if genus == 2:
        curve, d, _, _ = flow_fixture()
        return curve, d
    curve = make_curve(np.polynomial.polynomial.polyfromroots(GENUS3_ROOTS))
    xs = [2.5 + 1.0j, -1.5 - 1.5j, 0.5 + 2.0j]
    return curve, Divisor.of([curve.point(x, 1) for x in xs])


@pytest.mark.parametrize("genus", [1, 2, 3])
def test_second_kind_space_dimension(genus):
    curve, d = curve_and_divisor(genus)
    space = second_kind_space(curve, d)
    assert len(space) == 2 * genus
    for w in space:
        assert is_second_kind(curve, w)
        for p in d.support:
            assert pole_order_at(curve, w, curve.conjugate(p)) == 0
            assert pole_order_at(curve, w, p) <= 2


@pytest.mark.parametrize("genus", [1, 2])
def test_second_kind_space_is_ordered_by_point_then_pole_order(genus):
    curve, d = curve_and_divisor(genus)
    space = second_kind_space(curve, d)
    L = np.array([coefficient_map(curve, w, d) for w in space])
    assert np.allclose(L, np.eye(2 * genus), atol=1e-9)
    for i, p in enumerate(d.support):
        assert pole_order_at(curve, space[2 * i], p) == 0
        assert pole_order_at(curve, space[2 * i + 1], p) == 2


@pytest.mark.parametrize("genus", [1, 2, 3])
def test_gram_matrix_is_standard(genus):
    curve, d = curve_and_divisor(genus)
    gram = gram_matrix(symplectic_basis(curve, d))
    assert np.max(np.abs(gram - standard_symplectic(genus))) < 1e-8


@pytest.mark.parametrize("genus", [1, 2])
def test_basis_normalizations(genus):
    curve, d = curve_and_divisor(genus)
    basis = symplectic_basis(curve, d)
    for i in range(genus):
        expected_theta = np.zeros(2 * genus)
        expected_theta[2 * i] = 1.0
        expected_tau = np.zeros(2 * genus)
        expected_tau[2 * i + 1] = 1.0
        assert np.allclose(coefficient_map(curve, basis.theta[i], d), expected_theta, atol=1e-9)
        assert np.allclose(coefficient_map(curve, basis.tau[i], d), expected_tau, atol=1e-9)
    assert all(w.kind == "first_kind" for w in basis.theta)
    assert all(w.kind == "second_kind" for w in basis.tau)


def test_elliptic_theta_is_scaled_dx_over_y(elliptic, p2, sqrt6):
    basis = symplectic_basis(elliptic, Divisor.of([p2]))
    w = dx_over_y(elliptic)
    for x, s in ((3.0, 1), (-0.5 + 1j, -1), (4j, 1)):
        p = elliptic.point(x, s)
        assert basis.theta[0](p) == pytest.approx(sqrt6 * w(p))
    assert basis.points == [p2]


def test_theta_is_holomorphic():
    curve, d = curve_and_divisor(2)
    basis = symplectic_basis(curve, d)
    for w in basis.theta:
        for p in d.support:
            assert pole_order_at(curve, w, p) == 0
        assert pole_order_at(curve, w, INFINITY) == 0


def test_basis_is_deterministic():
    curve, d = curve_and_divisor(2)
    first, second = symplectic_basis(curve, d), symplectic_basis(curve, d)
    for u, v in zip(first.elements, second.elements):
        assert np.array_equal(u.a, v.a)
        assert np.array_equal(u.b, v.b)
        assert u.poles == v.poles


def test_special_divisor_rejected(quintic):
    p = quintic.point(2.0, 1)
    with pytest.raises(SpecialDivisor):
        symplectic_basis(quintic, Divisor.of([p, quintic.conjugate(p)]))


def test_wrong_degree_rejected(quintic):
    with pytest.raises(InadmissibleSupport):
        symplectic_basis(quintic, Divisor.of([quintic.point(2.0, 1)]))


def test_exact_forms_pair_to_zero(elliptic, p2):
    basis = symplectic_basis(elliptic, Divisor.of([p2]))
    df = exterior_derivative(elliptic, MeroFunction.build([1.0, 0.5], [0.3], ((3.0, 1), (-2.0 + 1j, 1))))
    for w in basis.elements:
        assert abs(omega_pairing(elliptic, df, w)) < 1e-9
        assert abs(omega_pairing(elliptic, w, df)) < 1e-9


def test_pairing_is_skew(quintic):
    f = MeroFunction.build([0.2, 1.0, -0.4j], [0.7], ((1.5 + 1.5j, 1), (-2.5, 1)))
    w1 = exterior_derivative(quintic, f)
    w2 = (Differential.build([1.0], [0.0], ((0.5 - 2j, 2),)) + holomorphic_basis(quintic)[1]).with_kind("second_kind")
    assert abs(omega_pairing(quintic, w1, w2) + omega_pairing(quintic, w2, w1)) < 1e-9
    matrix = pairing_matrix(quintic, [w1, w2])
    assert matrix[0, 1] == pytest.approx(omega_pairing(quintic, w1, w2), abs=1e-9)
    assert matrix[0, 0] == 0


def test_pairing_needs_second_kind(elliptic, p2):
    basis = symplectic_basis(elliptic, Divisor.of([p2]))
    w = Differential.build([1.0], [0.0], ((3.0, 1),))
    with pytest.raises(NotSecondKind):
        omega_pairing(elliptic, w, basis.tau[0])


def test_dual_second_kind(elliptic, p2):
    basis = symplectic_basis(elliptic, Divisor.of([p2]))
    tau = dual_second_kind(basis, [2.0 - 1j])
    assert omega_pairing(elliptic, basis.theta[0], tau) == pytest.approx(2.0 - 1j, abs=1e-9)
    with pytest.raises(InadmissibleSupport):
        dual_second_kind(basis, [1.0, 2.0])


def test_reduce_exact_form_to_zero(elliptic, p2):
    theta = exterior_derivative(elliptic, MeroFunction.build([1.0], [0.0], ((5.0, 1),)))
    reduced, f = reduce_modulo_exact(elliptic, theta, Divisor.of([p2]))
    points = [elliptic.point(x, s) for x, s in ((3.0, 1), (-0.7 + 1j, -1), (2j, 1))]
    for p in points:
        assert abs(reduced(p)) < 1e-8
    offsets = [f(p) - 1.0 / (p.x - 5.0) for p in points]
    assert np.allclose(offsets, offsets[0], atol=1e-8)


def test_reduce_keeps_holomorphic_pairings():
    curve, d = curve_and_divisor(2)
    f = MeroFunction.build([0.3, -1.0, 0.5j], [1.0], ((1.0 + 2.0j, 1), (-2.0, 1)))
    theta = (exterior_derivative(curve, f) + holomorphic_basis(curve)[0] * 0.5).with_kind("second_kind")
    reduced, _ = reduce_modulo_exact(curve, theta, d)
    for place in (curve.point(1.0 + 2.0j, 1), curve.point(1.0 + 2.0j, -1), curve.point(-2.0, 1), INFINITY):
        assert pole_order_at(curve, reduced, place) == 0
    for p in d.support:
        assert pole_order_at(curve, reduced, p) <= 2
    for eta in holomorphic_basis(curve):
        assert omega_pairing(curve, theta, eta) == pytest.approx(omega_pairing(curve, reduced, eta), abs=1e-8)


def test_reduce_leaves_allowed_poles(elliptic, p2):
    d = Divisor.of([p2])
    tau = symplectic_basis(elliptic, d).tau[0]
    reduced, f = reduce_modulo_exact(elliptic, tau, d)
    assert reduced is tau
    assert f.is_zero


def test_reduce_rejects_residues(elliptic, p2):
    with pytest.raises(NotSecondKind):
        reduce_modulo_exact(elliptic, Differential.build([1.0], [0.0], ((3.0, 1),)), Divisor.of([p2]))


def test_reduce_rejects_branch_poles(elliptic, p2):
    theta = Differential.build([1.0], [0.0], ((1.0, 2),))
    with pytest.raises(InadmissibleSupport):
        reduce_modulo_exact(elliptic, theta, Divisor.of([p2]))
