import numpy as np
import pytest
from hypothesis import strategies as st

from blab.core.blaschke import FiniteBlaschkeProduct
from blab.core.moebius import MoebiusAutomorphism
from blab.core.sampling import BoundarySampleSet, InteriorRegion

_angle = st.floats(min_value=0.0, max_value=2 * np.pi, allow_nan=False, allow_infinity=False)


@st.composite
def disc_points(draw, max_radius=0.95):
    r = draw(st.floats(min_value=0.0, max_value=max_radius, allow_nan=False, allow_infinity=False))
    return complex(r * np.exp(1j * draw(_angle)))


@st.composite
def unimodular(draw):
    return complex(np.exp(1j * draw(_angle)))


@st.composite
def automorphisms(draw):
    return MoebiusAutomorphism(w=draw(disc_points(0.9)), zeta=draw(unimodular()))


@st.composite
def blaschke_products(draw, max_degree=20, max_radius=0.95):
    zeros = draw(st.lists(disc_points(max_radius), min_size=0, max_size=max_degree))
    return FiniteBlaschkeProduct(zeta=draw(unimodular()), zeros=tuple(zeros))


@pytest.fixture
def two_points():
    """K = {1, i}."""
    return BoundarySampleSet.from_angles([0.0, np.pi / 2])


@pytest.fixture
def roots_of_unity():
    """The 8th roots of unity with the identity as targets."""
    points = np.exp(2j * np.pi * np.arange(8) / 8)
    return BoundarySampleSet(points=points, targets=points)


@pytest.fixture
def small_disc():
    return InteriorRegion.disc(0.4)
