import numpy as np
import pytest

from blab.analysis.peak import ExtensionMethod
from blab.analysis.singular import (
    CayleyLog,
    SingularInnerSurrogate,
    _continuity_delta,
    cayley_exp,
    cayley_log,
    simultaneous_singular_circle,
    simultaneous_singular_disc,
    surrogate_eval,
)
from blab.core.blaschke import identity_product
from blab.core.sampling import BoundarySampleSet, polar_grid
from blab.errors import DomainViolationError, NonConvergenceError

ATOM = SingularInnerSurrogate(B=identity_product())
GRID = polar_grid(0.9, 6, 24)


def _interior_points(count=100, radius=0.9, seed=11):
    rng = np.random.default_rng(seed)
    return radius * np.sqrt(rng.uniform(size=count)) * np.exp(2j * np.pi * rng.uniform(size=count))


def test_cayley_exp():
    assert cayley_exp(0j) == pytest.approx(np.exp(-1))
    assert cayley_exp(-1 + 0j) == pytest.approx(1.0)


def test_atomic_surrogate_values():
    assert ATOM(0j) == pytest.approx(np.exp(-1))
    assert ATOM(-1 + 0j) == pytest.approx(1.0)


def test_atomic_surrogate_is_unimodular_off_the_singular_point():
    angles = np.linspace(0.05, 2 * np.pi - 0.05, 400)
    values = surrogate_eval(ATOM, np.exp(1j * angles))
    assert np.max(np.abs(np.abs(values) - 1.0)) <= 1e-10


def test_surrogate_rejects_singular_direction():
    with pytest.raises(DomainViolationError):
        ATOM(1 + 0j)
    assert abs(ATOM(0.999 + 0j)) < 1e-100


def test_surrogate_is_bounded_and_zero_free():
    z = _interior_points(500, radius=0.99)
    values = ATOM(z)
    assert np.max(np.abs(values)) <= 1.0
    assert np.min(np.abs(values)) > 0.0


def test_cayley_log_of_constants():
    f0 = cayley_log(lambda z: np.full(z.shape, np.exp(-1), dtype=complex), GRID)
    assert f0(0.3j) == pytest.approx(0.0, abs=1e-12)
    f1 = cayley_log(lambda z: np.ones_like(z), GRID)
    assert f1(0.3j) == pytest.approx(-1.0)


def test_cayley_log_round_trip_of_atom():
    z = _interior_points()
    f0 = cayley_log(ATOM, GRID)
    assert np.max(np.abs(cayley_exp(f0(z)) - ATOM(z))) < 1e-8
    # log S = (z+1)/(z-1) is continuous, so the Cayley transform recovers z itself
    assert np.max(np.abs(f0(z) - z)) < 1e-8


def test_cayley_log_domain():
    with pytest.raises(DomainViolationError):
        cayley_log(lambda z: z, GRID)
    with pytest.raises(DomainViolationError):
        cayley_log(lambda z: np.full(z.shape, 1.5 + 0j), GRID)


def test_continuity_delta():
    delta0, delta = _continuity_delta(np.array([0j, 0.2 + 0j]), 0.3)
    assert delta0 == pytest.approx(0.4)
    assert 0 < delta <= delta0
    with pytest.raises(DomainViolationError):
        _continuity_delta(np.array([1 - 1e-8 + 0j]), 0.3)


@pytest.mark.slow
def test_singular_circle_self_consistent(small_disc):
    K = BoundarySampleSet.from_angles([2.0, 4.0])
    K = K.with_targets(ATOM(K.points))
    S = simultaneous_singular_circle(K, ATOM, small_disc, 0.3)
    assert S.err_K < 0.3
    assert S.err_L < 0.3
    z = _interior_points(500, radius=0.99)
    B = S.B(z)
    assert np.max(((B + 1) / (B - 1)).real) <= 1e-9
    assert np.max(np.abs(np.abs(S(K.points)) - 1.0)) <= 1e-8


@pytest.mark.slow
def test_singular_disc_constant_target(small_disc):
    K = BoundarySampleSet.from_angles([0.0], targets=[np.exp(-1)])
    r0, build = simultaneous_singular_disc(K, ATOM, small_disc, 0.3, method=ExtensionMethod.HERGLOTZ)
    for t in (0.25, 0.5, 0.75):
        r = r0 + t * (1.0 - r0)
        S = build(r)
        assert S.r_used == r
        assert S.err_K < 0.3
        assert S.err_L < 0.3
        assert np.min(np.abs(S(r * K.points))) > 0.0


def test_singular_disc_rejects_zero_targets(small_disc):
    K = BoundarySampleSet.from_angles([0.0], targets=[0.0])
    with pytest.raises(DomainViolationError):
        simultaneous_singular_disc(K, ATOM, small_disc, 0.3)


def test_cayley_log_rejects_an_unresolved_winding():
    # exp(15 (z^64 - 1)) turns by about 5 radians over the last of 64 steps near the circle
    fast = lambda z: np.exp(15.0 * (np.asarray(z, dtype=complex) ** 64 - 1.0))  # noqa: E731
    point = np.array([0.99 * np.exp(1j * np.pi / 128)])
    with pytest.raises(NonConvergenceError):
        cayley_log(fast, point)
    slow = CayleyLog(fast, steps=4096)
    assert np.abs(cayley_exp(slow(point)) / fast(point) - 1.0)[0] < 1e-8
