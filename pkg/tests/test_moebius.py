import numpy as np
import pytest
from hypothesis import given, settings

from blab.core.moebius import (
    MoebiusAutomorphism,
    moebius_compose,
    moebius_eval,
    moebius_inverse,
    moebius_lipschitz_bound,
)
from blab.errors import DomainViolationError
from tests.conftest import automorphisms, disc_points


def test_parameter_maps_to_origin():
    """The automorphism sends its parameter to 0."""
    m = MoebiusAutomorphism(w=0.3 + 0.4j, zeta=1j)
    assert abs(moebius_eval(m, 0.3 + 0.4j)) < 1e-15


def test_known_value():
    m = MoebiusAutomorphism(w=0.5)
    assert moebius_eval(m, 0j) == pytest.approx(-0.5)
    assert moebius_eval(m, 1 + 0j) == pytest.approx(1.0)


@pytest.mark.parametrize("w", [1.0, 1.5j, -1.0 + 0.1j])
def test_rejects_parameter_outside_disc(w):
    with pytest.raises(DomainViolationError):
        MoebiusAutomorphism(w=w)


def test_rejects_non_unimodular_rotation():
    with pytest.raises(DomainViolationError):
        MoebiusAutomorphism(w=0.1, zeta=0.5)


def test_rejects_points_outside_closed_disc():
    with pytest.raises(DomainViolationError):
        moebius_eval(MoebiusAutomorphism(w=0.2), 1.1 + 0j)


def test_vectorized_shape():
    m = MoebiusAutomorphism(w=0.1j)
    z = np.linspace(-0.5, 0.5, 12).reshape(3, 4).astype(complex)
    assert moebius_eval(m, z).shape == (3, 4)


@settings(max_examples=200, deadline=None)
@given(automorphisms(), disc_points(1.0))
def test_inverse_round_trip(m, z):
    """m^{-1}(m(z)) = z."""
    assert abs(moebius_eval(moebius_inverse(m), moebius_eval(m, z)) - z) < 1e-11


@settings(max_examples=200, deadline=None)
@given(automorphisms(), automorphisms(), disc_points(0.95))
def test_compose_matches_nested_evaluation(a, b, z):
    composed = moebius_compose(a, b)
    assert abs(moebius_eval(composed, z) - moebius_eval(a, moebius_eval(b, z))) < 1e-10


@settings(max_examples=100, deadline=None)
@given(automorphisms())
def test_circle_is_preserved(m):
    z = np.exp(2j * np.pi * np.arange(64) / 64)
    assert np.max(np.abs(np.abs(moebius_eval(m, z)) - 1.0)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(automorphisms(), disc_points(0.99), disc_points(0.99))
def test_lipschitz_bound(m, z1, z2):
    gap = abs(moebius_eval(m, z1) - moebius_eval(m, z2))
    assert gap <= moebius_lipschitz_bound(m) * abs(z1 - z2) + 1e-12
