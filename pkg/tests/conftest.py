from fractions import Fraction

import pytest
from hypothesis import strategies as st

from rlab.measure import DiscreteFunction, MeasureSpace


def fn(values, masses=None):
    return DiscreteFunction.from_values(values, masses)


small_ints = st.integers(min_value=-6, max_value=6)


@st.composite
def equal_mass_pair(draw, min_cells=1, max_cells=7, elements=small_ints):
    n = draw(st.integers(min_value=min_cells, max_value=max_cells))
    space = MeasureSpace.uniform(n)
    a = draw(st.lists(elements, min_size=n, max_size=n))
    b = draw(st.lists(elements, min_size=n, max_size=n))
    return DiscreteFunction(space, tuple(a)), DiscreteFunction(space, tuple(b))


@st.composite
def rational_function(draw, max_cells=6):
    n = draw(st.integers(min_value=1, max_value=max_cells))
    masses = draw(
        st.lists(st.fractions(min_value=Fraction(1, 6), max_value=3, max_denominator=6), min_size=n, max_size=n)
    )
    values = draw(st.lists(small_ints, min_size=n, max_size=n))
    return DiscreteFunction(MeasureSpace(tuple(masses)), tuple(values))


@pytest.fixture
def halves():
    return fn([1, 1, 1, -1, -1, -1])
