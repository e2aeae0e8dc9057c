import numpy as np

from services import sampling
from services.curve import Divisor, make_curve
from services.verification import (
    _guarded,
    check_global_residues,
    check_reduction,
    check_series_residues,
    check_skew_symmetry,
    run_suite,
)


def test_sampling_is_seeded():
    a = sampling.random_curve(np.random.default_rng(5), 2)
    b = sampling.random_curve(np.random.default_rng(5), 2)
    assert np.array_equal(a.pcoeffs, b.pcoeffs)
    assert a.genus == 2


def test_random_divisor_is_nonspecial_and_avoids_points():
    rng = np.random.default_rng(1)
    curve = sampling.random_curve(rng, 3)
    d = sampling.random_divisor(rng, curve)
    d0 = sampling.random_divisor(rng, curve, avoid=[p.x for p in d.support])
    assert d.degree == d0.degree == 3
    assert min(abs(p.x - q.x) for p in d.support for q in d0.support) > sampling.POINT_SEPARATION


def test_series_check():
    assert check_series_residues(np.random.default_rng(0)).passed


def test_pairing_checks_on_one_instance():
    rng = np.random.default_rng(2)
    curve = make_curve([-1, 0, 0, 0, 0, 1])
    d = Divisor.of([curve.point(2.0 + 0.5j, 1), curve.point(-1.5 + 1.0j, 1)])
    instances = [(curve, d, None)]
    assert check_skew_symmetry(rng, instances).passed
    assert check_global_residues(rng, instances).passed
    assert check_reduction(rng, instances).passed


def test_small_suite_passes():
    results = run_suite(seed=3, steps=200, instances=1)
    failed = [r for r in results if not r.passed]
    assert not failed, failed
    names = [r.name for r in results]
    assert names[:2] == ["dimension", "symplectic_gram"]
    for name in ("flow_rk4_order", "flow_time_scaling", "flow_residue_identity", "baker_akhiezer_divisor"):
        assert name in names


def test_suite_is_deterministic():
    first = run_suite(seed=4, steps=20, instances=1)
    second = run_suite(seed=4, steps=20, instances=1)
    assert [r.max_error for r in first] == [r.max_error for r in second]


def test_guard_reports_unexpected_errors_as_failures():
    def broken():
        raise TypeError("bad call")

    result = _guarded("broken", broken)
    assert not result.passed
    assert result.max_error == -1
    assert "TypeError" in result.detail
