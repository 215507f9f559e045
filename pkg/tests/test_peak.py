import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blab.analysis.peak import (
    ExtensionMethod,
    PeakSpec,
    bump_parameters,
    build_bump_u1,
    build_bump_u2,
    build_peak_function,
    choose_parameters,
    chord,
    extend_relative,
    extend_logarithm,
    extend_unit_ball,
    nth_root_in_cone,
)
from blab.core.blaschke import FiniteBlaschkeProduct, identity_product
from blab.core.sampling import BoundarySampleSet
from blab.core.transforms import BoundaryFunction, BoundaryGrid
from blab.errors import DomainViolationError, InfeasibleSpecError

ONE = BoundarySampleSet.from_angles([0.0])
EMPTY = BoundarySampleSet(points=np.zeros(0, dtype=complex))


@pytest.fixture
def grid():
    return BoundaryGrid(1024)


def test_choose_parameters_half():
    """sin(pi/6) = 1/2 is not below 1/2, and 6**7 + 1 < 2**19."""
    assert choose_parameters(0.5) == (7, 2.0**19)


def test_choose_parameters_large_epsilon():
    n, M = choose_parameters(0.9)
    assert n == 3
    assert (M - 1) ** (1 / n) > 2 + 2 / 0.9
    assert (M / 2 - 1) ** (1 / n) <= 2 + 2 / 0.9


@pytest.mark.parametrize("epsilon", [0.0, 1.0, -0.3])
def test_choose_parameters_rejects_epsilon(epsilon):
    with pytest.raises(InfeasibleSpecError):
        choose_parameters(epsilon)


def test_peak_spec_validation():
    with pytest.raises(InfeasibleSpecError):
        PeakSpec.from_epsilon(ONE, 0.5, U_radius=0.1, V_radius=0.2)
    with pytest.raises(InfeasibleSpecError):
        PeakSpec.from_epsilon(ONE, 0.5, cap=100.0)
    with pytest.raises(InfeasibleSpecError):
        PeakSpec(K=ONE, U_radius=0.3, V_radius=0.1, epsilon=0.5, n=7, M=1000.0, cap=1e10)


def test_bumps_without_points(grid):
    spec = PeakSpec.from_epsilon(EMPTY, 0.5)
    assert np.allclose(build_bump_u1(spec, grid).values, 1.0)
    assert np.allclose(build_bump_u2(spec, grid).values, spec.M)


def test_bump_u1_peaks_at_cap():
    spec = PeakSpec.from_epsilon(ONE, 0.5, V_radius=0.05)
    bumps = bump_parameters(spec)
    assert bumps.g1(np.array([1 + 0j]))[0].real == pytest.approx(spec.cap, rel=1e-9)
    assert bumps.mean_u1 - 1.0 < spec.dist / 2


def test_bump_excess_scales_with_v_radius():
    wide = bump_parameters(PeakSpec.from_epsilon(ONE, 0.5, V_radius=0.05))
    narrow = bump_parameters(PeakSpec.from_epsilon(ONE, 0.5, V_radius=0.025))
    assert (wide.mean_u1 - 1.0) / (narrow.mean_u1 - 1.0) == pytest.approx(2.0)


def test_bump_u2_profile():
    spec = PeakSpec.from_epsilon(ONE, 0.5, V_radius=0.02)
    bumps = bump_parameters(spec)
    values = bumps.g2(np.array([1 + 0j, -1 + 0j])).real
    assert values[0] == pytest.approx(1.0)
    assert values[1] == pytest.approx(spec.M, rel=1e-6)
    assert bumps.mean_u2 > spec.M - 0.5 * spec.dist


def test_nth_root_in_cone():
    grid = BoundaryGrid(8)
    assert np.allclose(nth_root_in_cone(BoundaryFunction(grid, np.ones(8)), 5).values, 1.0)
    assert np.allclose(nth_root_in_cone(BoundaryFunction(grid, np.full(8, 8.0)), 3).values, 2.0)
    root = nth_root_in_cone(BoundaryFunction(grid, np.full(8, 1 + 1j)), 4).values
    assert np.all(np.abs(np.angle(root)) < np.pi / 8)
    assert np.allclose(np.abs(root) ** 4, abs(1 + 1j), atol=1e-12)


def test_nth_root_rejects_left_of_cone():
    grid = BoundaryGrid(8)
    with pytest.raises(DomainViolationError):
        nth_root_in_cone(BoundaryFunction(grid, np.full(8, 0.5 + 0j)), 2)


def test_peak_function_without_points(grid):
    spec = PeakSpec.from_epsilon(EMPTY, 0.5)
    h = build_peak_function(spec, grid)
    bound = 2.0 / ((spec.M - 1.0) ** (1.0 / spec.n) - 2.0)
    assert np.max(np.abs(h.boundary.values)) <= bound < spec.epsilon


def test_peak_function_single_point():
    grid = BoundaryGrid(4096)
    spec = PeakSpec.from_epsilon(ONE, 0.3)
    h = build_peak_function(spec, grid)
    far = np.abs(np.angle(grid.points)) > spec.U_radius
    assert np.max(np.abs(h.boundary.values[far])) < 0.3
    assert np.max(np.abs(h.boundary.values.imag)) < 0.3
    assert abs(h(1 + 0j) - 1) < 0.03
    assert h.diagnostics["completion"] in ("fft", "closed")


def test_g1_herglotz_bound_outside_u():
    spec = PeakSpec.from_epsilon(ONE, 0.3)
    rng = np.random.default_rng(5)
    angles = rng.uniform(spec.U_radius, 2 * np.pi - spec.U_radius, 50)
    z = rng.uniform(0, 1, 50) * np.exp(1j * angles)
    assert np.max(np.abs(bump_parameters(spec).g1(z) - 1.0)) <= 1.0


@st.composite
def separated_sets(draw, min_size=2, max_size=4, min_gap=0.3):
    size = draw(st.integers(min_value=min_size, max_value=max_size))
    gaps = draw(st.lists(st.floats(min_value=min_gap, max_value=1.0), min_size=size, max_size=size))
    angles = np.cumsum(gaps) * (2 * np.pi - min_gap) / np.sum(gaps)
    return BoundarySampleSet.from_angles(angles + draw(st.floats(min_value=0.0, max_value=2 * np.pi)))


@settings(max_examples=10, deadline=None)
@given(K=separated_sets())
def test_peak_properties_on_several_points(K):
    grid = BoundaryGrid(2048)
    spec = PeakSpec.from_epsilon(K, 0.3)
    h = build_peak_function(spec, grid)
    values = h.boundary.values
    far = K.angular_distance(grid.points) >= spec.U_radius
    assert np.max(np.abs(values[far])) < 0.3
    assert np.max(np.abs(h(K.points) - 1.0)) < 0.03
    assert np.min(values.real) >= -1e-9
    assert np.max(np.abs(values.imag)) < 0.3
    assert np.max(np.abs(values)) <= 1.0 + 1e-9


def test_bump_tolerances_outside_v():
    K = BoundarySampleSet.from_angles([0.0, np.pi / 2])
    spec = PeakSpec.from_epsilon(K, 0.5, V_radius=0.05)
    bumps = bump_parameters(spec)
    angles = np.linspace(0.0, 2 * np.pi, 4000, endpoint=False)
    z = np.exp(1j * angles)[K.angular_distance(np.exp(1j * angles)) > spec.V_radius]
    J, half_sin = K.size, np.sin(spec.V_radius / 2)
    assert np.max(bumps.g1(z).real) - 1.0 <= 1.01 * J * bumps.c * bumps.sigma1 / (2 * half_sin**2) + 1e-15
    assert spec.M - np.min(bumps.g2(z).real) <= 1.01 * (spec.M - 1.0) * J * bumps.sigma2 / half_sin
    at_K = bumps.g2(K.points).real
    assert np.all(at_K >= 1.0)
    assert np.all(at_K <= 1.0 + 1e-6)


def test_chord():
    assert chord(np.pi) == pytest.approx(2.0)
    assert chord(np.pi / 3) == pytest.approx(1.0)


def test_extension_of_constant_one(grid):
    K = ONE.with_targets([1.0])
    g = extend_unit_ball(K, PeakSpec.from_epsilon(ONE, 0.2), grid)
    assert g.method is ExtensionMethod.PEAK
    assert g(0.3j) == pytest.approx(1.0)
    assert g.diagnostics["m_used"] == 0.0
    assert g.diagnostics["k_residual"] < 1e-8


@pytest.mark.parametrize("method", [ExtensionMethod.PEAK, ExtensionMethod.HERGLOTZ])
def test_extension_of_negative_target(grid, method):
    K = ONE.with_targets([-0.5])
    g = extend_unit_ball(K, PeakSpec.from_epsilon(ONE, 0.2), grid, method=method)
    assert abs(g(1 + 0j) + 0.5) < 0.2
    assert g.diagnostics["sup_modulus"] <= 1.0 + 1e-9
    assert np.max(np.abs(g(0.9 * grid.points))) <= 1.0 + 1e-9


def test_k_residual_shrinks_with_delta(grid):
    K = ONE.with_targets([-0.5])
    spec = PeakSpec.from_epsilon(ONE, 0.2)
    runs = [extend_unit_ball(K, spec, grid, delta=d).diagnostics for d in (0.4, 0.2, 0.1, 0.05)]
    residuals = [run["k_residual"] for run in runs]
    assert residuals == sorted(residuals, reverse=True)
    assert residuals[-1] < 0.2
    assert all(run["m_used"] == pytest.approx(np.pi) for run in runs)
    assert all(run["sup_modulus"] <= 1.0 + 1e-9 for run in runs)


def test_delta_search_stops_at_first_passing_value(grid):
    K = ONE.with_targets([-0.5])
    g = extend_unit_ball(K, PeakSpec.from_epsilon(ONE, 0.2), grid)
    delta = g.diagnostics["delta_used"]
    assert np.log2(delta) == pytest.approx(round(np.log2(delta)))
    coarser = extend_unit_ball(K, PeakSpec.from_epsilon(ONE, 0.2), grid, delta=2 * delta).diagnostics
    assert max(coarser["k_residual"], coarser["far_max"]) >= 0.2 or delta == 0.5


def test_logarithm_extension_interpolates_with_non_positive_real_part(grid):
    K = BoundarySampleSet.from_angles([0.0, np.pi])
    spec = PeakSpec.from_epsilon(K, 0.2)
    logs = np.log(np.array([0.8j, -0.8j]))
    F = extend_logarithm(K, logs, spec, grid)
    assert np.allclose(F(K.points), logs - F.eta, atol=1e-12)
    assert 0.0 < F.eta < 1e-6
    samples = np.concatenate([grid.points, 0.7 * grid.points, 0.99 * grid.points])
    assert np.max(F(samples).real) <= 0.0
    assert np.max(np.abs(F(samples).imag)) <= F.m + 1e-9


def test_opposite_phases_use_the_largest_imaginary_part(grid):
    """m bounds |Im log phi| over the disc rather than summing over K."""
    K = BoundarySampleSet.from_angles([0.0, np.pi], targets=[0.8j, -0.8j])
    g = extend_unit_ball(K, PeakSpec.from_epsilon(K, 0.25), grid)
    assert np.pi / 2 - 1e-9 <= g.diagnostics["m_used"] < np.pi
    assert g.diagnostics["k_residual"] < 0.25
    assert g.diagnostics["far_max"] < 0.25
    assert g.diagnostics["sup_modulus"] <= 1.0 + 1e-9


def test_peak_extension_needs_zero_free_targets(grid):
    with pytest.raises(DomainViolationError):
        extend_unit_ball(ONE.with_targets([0.0]), PeakSpec.from_epsilon(ONE, 0.2), grid)


def test_relative_extension_with_unit_factor_matches_plain(grid):
    K = BoundarySampleSet.from_angles([0.0, np.pi], targets=[0.5j, -0.7])
    spec = PeakSpec.from_epsilon(K, 0.2)
    plain = extend_unit_ball(K, spec, grid, method="herglotz")
    relative = extend_relative(K, FiniteBlaschkeProduct(), spec, grid, method="herglotz")
    z = np.array([0.0, 0.4 + 0.3j, -0.9j])
    assert np.allclose(relative(z), plain(z))


@pytest.mark.parametrize("method", [ExtensionMethod.PEAK, ExtensionMethod.HERGLOTZ])
def test_relative_extension_of_identity(grid, method):
    K = ONE.with_targets([0.3])
    g = extend_relative(K, identity_product(), PeakSpec.from_epsilon(ONE, 0.2), grid, method=method)
    assert g.diagnostics["k_residual"] < 0.2
    assert g.diagnostics["far_max"] < 0.2
    # |g - f| = |f| |g0 - 1| and |f| <= 1
    assert g.diagnostics["far_max"] <= g.diagnostics["relative_far_max"] + 1e-12
