import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blab.analysis.approx import (
    SchurParameters,
    blaschke_from_schur,
    caratheodory_approximate,
    fisher_grid_search,
    fisher_interpolate,
    schur_decompose,
    taylor_from_samples,
    verify_ball_membership,
)
from blab.core.blaschke import taylor_series
from blab.core.moebius import MoebiusAutomorphism, moebius_eval
from blab.core.sampling import BoundarySampleSet, InteriorRegion, polar_grid
from blab.errors import DomainViolationError, NonConvergenceError
from tests.conftest import disc_points

HALF_DISC = InteriorRegion.disc(0.5)


def test_schur_parameters_validation():
    with pytest.raises(DomainViolationError):
        SchurParameters((1.2,))
    with pytest.raises(DomainViolationError):
        SchurParameters((1.0, 0.5))
    with pytest.raises(DomainViolationError):
        SchurParameters((0.5,), terminal=True)
    params = SchurParameters((0.5, 1j), terminal=True)
    assert params.interior == (0.5 + 0j,)
    assert len(params) == 2


def test_schur_of_constant_is_terminal_after_one_step():
    params = schur_decompose([0.4, 0, 0, 0], depth=4)
    assert params.gammas[0] == pytest.approx(0.4)
    assert np.allclose(params.gammas[1:], 0)


def test_schur_of_unimodular_constant():
    params = schur_decompose([1j, 0, 0], depth=3)
    assert params.terminal
    assert params.gammas == (1j,)


def test_schur_rejects_functions_outside_ball():
    with pytest.raises(DomainViolationError):
        schur_decompose([1.5, 0], depth=2)


@settings(max_examples=200, deadline=None)
@given(st.lists(disc_points(0.6), min_size=1, max_size=16))
def test_schur_round_trip(gammas):
    """Reconstructing from parameters and decomposing again recovers them."""
    params = SchurParameters(tuple(gammas))
    B = blaschke_from_schur(params)
    recovered = schur_decompose(taylor_series(B, len(gammas)), len(gammas))
    assert np.allclose(recovered.gammas, gammas, atol=1e-8)


def test_blaschke_from_terminal_schur():
    B = blaschke_from_schur(SchurParameters((0.0, 1.0), terminal=True))
    assert B.degree == 1
    z = np.array([0.3, -0.2j])
    assert np.allclose(B(z), z)


def test_blaschke_fill_degree():
    B = blaschke_from_schur(SchurParameters((0.0,)), fill_degree=2)
    assert np.allclose(B(np.array([0.5])), [0.125])
    with pytest.raises(ValueError):
        blaschke_from_schur(SchurParameters((0.0,)), fill_degree=-1)


def test_taylor_from_samples_of_polynomial():
    coeffs = taylor_from_samples(lambda z: 1 + 2 * z - 0.5j * z**3, 6)
    assert np.allclose(coeffs, [1, 2, 0, -0.5j, 0, 0], atol=1e-10)


def test_verify_ball_membership():
    assert verify_ball_membership(lambda z: 0.5 * z, polar_grid(1.0, 2, 8)) == pytest.approx(0.5)
    assert verify_ball_membership(lambda z: z, np.zeros(0)) == 0.0


def test_caratheodory_zero_function():
    """f = 0 on |z| <= 1/2 with epsilon 0.01 gives z^7 and error 2^-7."""
    B = caratheodory_approximate(lambda z: np.zeros_like(z), HALF_DISC, 0.01)
    assert B.degree == 7
    err = np.max(np.abs(B(HALF_DISC.grid(refine=2))))
    assert err <= 2.0**-7 + 1e-12


def test_caratheodory_reproduces_blaschke_product():
    """f(z) = z^2 is returned exactly."""
    B = caratheodory_approximate(lambda z: z**2, HALF_DISC, 0.01)
    grid = HALF_DISC.grid(refine=2)
    assert np.max(np.abs(B(grid) - grid**2)) < 1e-9


def test_caratheodory_constant_beats_moebius_power_reference():
    """f = 0.4: the reference phi_{-0.4}(z^k) is within 1.4 * 0.5^k / (1 - 0.4*0.5^k) on L."""
    B = caratheodory_approximate(lambda z: np.full(z.shape, 0.4, dtype=complex), HALF_DISC, 0.01)
    grid = HALF_DISC.grid(refine=2)
    assert np.max(np.abs(B(grid) - 0.4)) < 0.01
    reference = moebius_eval(MoebiusAutomorphism(w=-0.4), grid**B.degree)
    assert np.max(np.abs(reference - 0.4)) <= 1.4 * 0.5**B.degree / (1 - 0.4 * 0.5**B.degree) + 1e-12


def test_caratheodory_with_interior_nodes():
    nodes = np.array([0.9, 0.9j])
    f = lambda z: 0.5 * z  # noqa: E731
    B = caratheodory_approximate(f, HALF_DISC, 0.05, nodes=nodes)
    assert np.allclose(B(nodes), f(nodes), atol=1e-8)
    assert np.max(np.abs(B(HALF_DISC.grid(refine=2)) - f(HALF_DISC.grid(refine=2)))) < 0.05


def test_caratheodory_rejects_functions_outside_ball():
    with pytest.raises(DomainViolationError):
        caratheodory_approximate(lambda z: np.full(z.shape, 1.5 + 0j), HALF_DISC, 0.1)


def test_caratheodory_reports_non_convergence():
    with pytest.raises(NonConvergenceError) as info:
        caratheodory_approximate(lambda z: np.zeros_like(z), InteriorRegion.disc(0.9), 1e-12, max_degree=8)
    assert info.value.best_error < 1.0


def test_fisher_identity(roots_of_unity):
    B = fisher_interpolate(roots_of_unity, 1e-10)
    assert B.degree == 1
    assert np.max(np.abs(B(roots_of_unity.points) - roots_of_unity.points)) <= 1e-10


def test_fisher_matches_rotation():
    K = BoundarySampleSet.from_angles([0.0, 2.0], targets=[1j, 1j])
    B = fisher_interpolate(K, 1e-10)
    assert B.degree == 0
    assert B.zeta == pytest.approx(1j)


@pytest.mark.slow
def test_fisher_against_grid_search_oracle(two_points):
    """K = {1, i} with targets {1, -1} is reachable below 1e-3."""
    K = two_points.with_targets([1, -1])
    B = fisher_interpolate(K, 1e-3)
    residual = np.max(np.abs(B(K.points) - K.targets))
    oracle_err, _ = fisher_grid_search(K, alpha_n=256, w_n=100)
    assert residual < 1e-3
    assert residual <= oracle_err < 0.2


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.0, max_value=2 * np.pi, allow_nan=False))
def test_fisher_commutes_with_rotation(alpha):
    """Rotating K by alpha rotates the interpolant: B_alpha(e^{i alpha} z) = B(z)."""
    m = MoebiusAutomorphism(w=0.3 + 0.2j, zeta=np.exp(0.7j))
    angles = np.array([0.0, 2.0, 4.0])
    K = BoundarySampleSet.from_angles(angles, targets=moebius_eval(m, np.exp(1j * angles)))
    rotated = BoundarySampleSet.from_angles(angles + alpha, targets=K.targets)
    B = fisher_interpolate(K, 1e-10)
    B_alpha = fisher_interpolate(rotated, 1e-10)
    assert B.degree == B_alpha.degree == 1
    z = polar_grid(0.9, 4, 16)
    assert np.max(np.abs(B_alpha(np.exp(1j * alpha) * z) - B(z))) < 1e-7


def test_fisher_needs_points():
    with pytest.raises(ValueError):
        fisher_interpolate(BoundarySampleSet(points=np.zeros(0), targets=np.zeros(0)), 0.1)


def test_fisher_is_deterministic_for_a_seed():
    K = BoundarySampleSet.from_angles([0.0, 1.0, 2.5], targets=np.exp(1j * np.array([0.3, -1.0, 2.0])))
    first = fisher_interpolate(K, 1e-8, seed=3)
    second = fisher_interpolate(K, 1e-8, seed=3)
    assert first == second


def test_grid_search_finds_identity(two_points):
    err, B = fisher_grid_search(two_points.with_targets(two_points.points), alpha_n=64, w_n=20)
    assert err < 1e-12
    assert np.allclose(B(two_points.points), two_points.points)
