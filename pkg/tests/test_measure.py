from fractions import Fraction

import pytest
from hypothesis import given

from conftest import fn, rational_function
from rlab.measure import (
    DistributionProfile,
    MeasureSpace,
    average,
    decreasing_rearrangement,
    distribution_mass,
    equidistributed,
    integrate,
    negative_part,
    positive_part,
    reparameterize_theta,
)


def test_integrate_examples():
    assert integrate(fn([1, 2])) == 3
    assert integrate(fn([5, 7]), []) == 0
    assert integrate(fn([3, -1, 2], [0.5, 0.5, 1])) == 3


def test_integrate_bad_index():
    with pytest.raises(IndexError):
        integrate(fn([1, 2]), [2])


def test_average_examples():
    assert average(fn([1, 3])) == 2
    assert average(fn([1, 3]), []) == 0
    assert average(fn([4], [2])) == 4


def test_distribution_mass_examples():
    assert distribution_mass(fn([0, 1, 2]), 0.5, ">") == 2
    assert distribution_mass(fn([4, 4, 4], [1, 2, 3]), 4, ">=") == 6
    assert distribution_mass(fn([1, 1, 2], [1, 2, 3]), 1, "=") == 3
    with pytest.raises(ValueError):
        distribution_mass(fn([1]), 0, "~")


def test_equidistributed_examples():
    assert equidistributed(fn([1, 2]), fn([2, 1]))
    assert equidistributed(fn([1], [2]), fn([1, 1]))
    assert not equidistributed(fn([1, 2]), fn([1, 2], [2, 1]))


def test_decreasing_rearrangement_examples():
    assert decreasing_rearrangement(fn([2, -1, 2])).breakpoints == ((2, 2), (-1, 3))
    assert decreasing_rearrangement(fn([7, 7], [1, 2])).breakpoints == ((7, 3),)
    assert decreasing_rearrangement(fn([1, 3], [2, 1])).breakpoints == ((3, 1), (1, 3))


def test_profile_is_left_continuous():
    prof = decreasing_rearrangement(fn([2, -1, 2]))
    assert prof(2) == 2
    assert prof(2.0001) == -1
    assert prof(0) == 2
    with pytest.raises(ValueError):
        prof(3.5)


def test_profile_rejects_bad_breakpoints():
    with pytest.raises(ValueError):
        DistributionProfile(((1, 1), (2, 2)))


def test_theta_examples():
    assert reparameterize_theta(fn([0, 1, 2])).values == (0, 1, 2)
    assert reparameterize_theta(fn([5], [3])).values == (0,)
    assert reparameterize_theta(fn([3, 1, 2], [1, 2, 4])).values == (6, 0, 2)
    with pytest.raises(ValueError):
        reparameterize_theta(fn([1, 1]))


def test_parts_examples():
    f = fn([-1, 2])
    assert positive_part(f).values == (0, 2)
    assert negative_part(f).values == (1, 0)
    assert integrate(positive_part(f)) + integrate(negative_part(f)) == integrate(abs(f)) == 3


def test_space_validation():
    with pytest.raises(ValueError):
        MeasureSpace((1, 0))
    with pytest.raises(ValueError):
        MeasureSpace(())
    assert MeasureSpace((Fraction(1, 2), Fraction(1, 2))).equal_mass
    assert not MeasureSpace((1, 2)).equal_mass


@given(rational_function())
def test_profile_equidistributed_with_input(f):
    prof = decreasing_rearrangement(f)
    assert equidistributed(prof.as_function(), f)
    for v, c in prof.breakpoints:
        assert distribution_mass(f, v, ">=") == c


@given(rational_function())
def test_profile_nonincreasing(f):
    prof = decreasing_rearrangement(f)
    assert list(prof.values) == sorted(prof.values, reverse=True)
    assert prof.total == f.space.total


@given(rational_function())
def test_equidistribution_symmetric_and_injective_maps(f):
    perm = list(reversed(range(len(f))))
    g = f.permuted(perm).__class__(
        MeasureSpace(tuple(f.space.masses[j] for j in perm)), f.permuted(perm).values
    )
    assert equidistributed(f, f)
    assert equidistributed(f, g) and equidistributed(g, f)
    lift = lambda v: 3 * v + 1  # noqa: E731
    assert equidistributed(f.map(lift), g.map(lift))


@given(rational_function())
def test_parts_reconstruct(f):
    assert (positive_part(f) - negative_part(f)).values == f.values


def test_theta_histogram_is_uniform_up_to_one_cell():
    n = 200
    zeta = fn([((7 * i) % n) / n + i * 1e-9 for i in range(n)])
    theta = reparameterize_theta(zeta)
    bins = 10
    counts = [0] * bins
    for t in theta.values:
        counts[min(bins - 1, int(t * bins / n))] += 1
    assert max(abs(c - n / bins) for c in counts) <= 1


def test_profile_gaps_shrink_with_refinement():
    import math

    def widest_gap(n):
        f = fn([math.sin(3 * (i + 0.5) / n) for i in range(n)])
        vals = decreasing_rearrangement(f).values
        return max(a - b for a, b in zip(vals, vals[1:]))

    assert widest_gap(400) < widest_gap(100)
