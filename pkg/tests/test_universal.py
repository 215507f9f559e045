import numpy as np
import pytest

from blab.analysis.peak import ExtensionMethod
from blab.analysis.universal import (
    MAX_STAGES,
    RadiusSchedule,
    TruncatedUniversalProduct,
    annulus_radius,
    build_universal,
    certificates_hold,
    certified_bound,
    check_membership,
    conv_error,
    error_trace,
    evaluate_partial,
    pick_near_one,
    radius_candidates,
    rim_points,
    stage_budgets,
    tail_bound,
)
from blab.core.blaschke import FiniteBlaschkeProduct, blaschke_factor, identity_product
from blab.core.sampling import BoundarySampleSet
from blab.errors import DomainViolationError

ONE = BoundarySampleSet.from_angles([0.0])


@pytest.fixture
def two_stage():
    """z followed by z: stage radii 0.5 and 0.8 at K = {1}."""
    return TruncatedUniversalProduct(
        K=ONE,
        factors=[identity_product(), identity_product()],
        radii=[0.5, 0.8],
        targets=[np.array([0.25 + 0j]), np.array([0.64 + 0j])],
    )


def test_stage_budgets():
    assert stage_budgets(0) == (0.5, 1.0)
    assert stage_budgets(3) == (0.125, 0.125)


def test_certified_bound_decreases():
    bounds = [certified_bound(k) for k in range(MAX_STAGES)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    assert certified_bound(0, 1) == 1.0
    assert certified_bound(1, 4) == pytest.approx(0.5 + 0.25 + 0.125)


def test_radius_schedule_validation():
    with pytest.raises(ValueError):
        RadiusSchedule(())
    with pytest.raises(ValueError):
        RadiusSchedule((0.5, 1.0))
    with pytest.raises(ValueError):
        RadiusSchedule((0.6, 0.5))
    assert RadiusSchedule((0.5, 0.7, 0.9)).after(0.6) == [0.7, 0.9]


def test_radius_candidates():
    auto = list(radius_candidates(0.5, None))
    assert auto[:2] == [0.75, 0.875]
    assert all(a < b < 1.0 for a, b in zip(auto, auto[1:]))
    assert list(radius_candidates(0.6, RadiusSchedule((0.5, 0.7, 0.9)))) == [0.7, 0.9]


def test_evaluate_partial(two_stage):
    assert evaluate_partial(two_stage, 0, 0.5, 1 + 0j) == pytest.approx(0.5)
    assert evaluate_partial(two_stage, 1, 0.5, 1 + 0j) == pytest.approx(0.25)
    assert two_stage(0.3 + 0j) == pytest.approx(0.09)
    with pytest.raises(ValueError):
        evaluate_partial(two_stage, 2, 0.5, 1 + 0j)
    with pytest.raises(DomainViolationError):
        evaluate_partial(two_stage, 0, 0.0, 1 + 0j)


@pytest.mark.parametrize("r", [1.0, 1.5, -0.5])
def test_evaluate_partial_rejects_radii_outside_the_open_interval(two_stage, r):
    with pytest.raises(DomainViolationError):
        evaluate_partial(two_stage, 1, r, 1 + 0j)


def test_product_and_degrees(two_stage):
    assert two_stage.n_stages == 2
    assert two_stage.degree_ledger == [1, 1]
    assert two_stage.degree == 2
    assert two_stage.product(0)(0.4 + 0j) == pytest.approx(0.4)
    assert two_stage.product()(0.4 + 0j) == pytest.approx(0.16)


def test_error_trace_of_hand_built_product(two_stage):
    trace = error_trace(two_stage)
    assert [k for k, _, _ in trace] == [0, 1]
    assert all(measured == pytest.approx(0.0, abs=1e-12) for _, measured, _ in trace)
    assert [bound for _, _, bound in trace] == [certified_bound(0), certified_bound(1)]
    assert certificates_hold(two_stage)


def test_tail_bound_of_last_stage(two_stage):
    assert tail_bound(two_stage, 1) == (0.0, 0)
    measured, bound = tail_bound(two_stage, 0)
    assert measured == pytest.approx(1.5)
    assert bound == 0.5
    with pytest.raises(ValueError):
        tail_bound(two_stage, 2)


def test_rim_points():
    rim = rim_points(0.9, ONE, density=16)
    assert rim.size == 32 + 161
    assert np.allclose(np.abs(rim), 0.9)
    assert conv_error(FiniteBlaschkeProduct(), 0.9, ONE) == 0.0


def test_annulus_radius_clears_the_zeros():
    P = blaschke_factor(0.8)
    R = annulus_radius(P, ONE, 0.1)
    assert R > 0.8
    assert abs(P(R) - P(1 + 0j)) < 0.2


def test_pick_near_one_interpolates():
    nodes = np.array([0.5, 0.6j])
    values = np.array([0.2, -0.3j])
    B = pick_near_one(nodes, values)
    assert B.degree == 2
    assert np.allclose(B(nodes), values, atol=1e-9)


def test_pick_near_one_is_close_to_one_inside():
    nodes = 0.999 * np.array([1.0, 1j])
    B = pick_near_one(nodes, np.array([0.1, 0.1j]))
    assert np.allclose(B(nodes), [0.1, 0.1j], atol=1e-9)
    assert abs(B(0j) - 1.0) < 0.05


def test_pick_near_one_rejects_unimodular_values():
    with pytest.raises(DomainViolationError):
        pick_near_one(np.array([0.5]), np.array([1.0]))


def test_membership_of_identity_fails():
    """f(z) = z stays at distance 1 + r from -1 along the radius to 1."""
    report = check_membership(lambda z: z, ONE, [[-1.0]], RadiusSchedule((0.5, 0.9)), tol=0.5)
    (_, r, err), = report.entries
    assert r == 0.5
    assert err == pytest.approx(1.5)
    assert not report.passed


def test_membership_of_own_dilate():
    report = check_membership(lambda z: z, ONE, [[0.9]], RadiusSchedule((0.5, 0.9)), tol=1e-12)
    assert report.entries[0][1] == 0.9
    assert report.passed


def test_build_universal_validates_targets():
    with pytest.raises(ValueError):
        build_universal(ONE, [])
    with pytest.raises(ValueError):
        build_universal(ONE, [[0.5]] * (MAX_STAGES + 1))
    with pytest.raises(DomainViolationError):
        build_universal(ONE, [[1.5]])


@pytest.mark.slow
def test_single_stage_build():
    K = BoundarySampleSet.from_angles([0.0, np.pi / 2])
    T = build_universal(K, [[0.5, 0.5]], method=ExtensionMethod.HERGLOTZ)
    assert T.n_stages == 1
    assert T.failed_stage is None
    (k, measured, bound), = error_trace(T)
    assert measured == pytest.approx(T.certificates[0]["boundary_error"], abs=1e-12)
    assert measured < stage_budgets(0)[0]


@pytest.mark.slow
def test_four_stage_build():
    K = BoundarySampleSet.from_angles([0.0, np.pi / 2])
    targets = [[0.5, 0.5], [-0.5, -0.5], [0.5j, 0.5j], [0.0, 0.0]]
    T = build_universal(K, targets, method=ExtensionMethod.HERGLOTZ)
    assert T.failed_stage is None
    assert T.n_stages == 4
    assert all(a < b for a, b in zip(T.radii, T.radii[1:]))
    trace = error_trace(T)
    assert len(trace) == 4
    assert certificates_hold(T)
    for m in range(3):
        measured, bound = tail_bound(T, m)
        assert measured <= bound + 1e-9
    schedule = RadiusSchedule(tuple(T.radii))
    report = check_membership(T, K, targets, schedule, tol=certified_bound(0))
    assert report.passed
