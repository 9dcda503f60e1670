from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import equal_mass_pair, fn
from rlab.measure import MeasureSpace, average, equidistributed, integrate
from rlab.oracles import brute_sup, min_matching_error, orbit_average
from rlab.rearrange import (
    NotSimilarlyOrderedError,
    OrderedPair,
    SpaceMismatchError,
    abs_sup_bound_check,
    chebyshev_lower,
    conv1_average_on,
    conv1_two_block,
    katok_transport,
    pairing_lower_bound,
    pairing_value_invariance_check,
    product_abs_bound_check,
    similarly_ordered,
    split_to_equal_mass,
    sup_pairing,
)
from rlab.rng import CounterRNG


def test_split_examples():
    (g,) = split_to_equal_mass([fn([1, 2], [2, 1])])
    assert g.values == (1, 1, 2) and g.space.masses == (1, 1, 1)
    f = fn([3, 4])
    assert split_to_equal_mass([f]) == [f]
    (h,) = split_to_equal_mass([fn([5, 6], [Fraction(1, 3), Fraction(2, 3)])])
    assert h.space.masses == (Fraction(1, 3),) * 3 and h.values == (5, 6, 6)


def test_split_limits():
    with pytest.raises(ValueError):
        split_to_equal_mass([fn([1, 2], [1, 1000])], max_cells=10)
    with pytest.raises(SpaceMismatchError):
        split_to_equal_mass([fn([1, 2]), fn([1, 2], [1, 2])])


def test_sup_pairing_examples():
    assert sup_pairing(fn([1, 2, 3]), fn([0, 1, 2])).value == 8
    phi0 = fn([4, -1, 2])
    assert sup_pairing(phi0, fn([3, 3, 3])).value == 3 * integrate(phi0)
    p = sup_pairing(fn([1, 2, 3]), fn([2, 1, 0]))
    assert p.value == 8 and p.witness == (2, 1, 0)


def test_sup_pairing_needs_equal_masses():
    with pytest.raises(ValueError):
        sup_pairing(fn([1, 2], [1, 2]), fn([1, 2], [1, 2]))


def test_invariance_examples():
    assert pairing_value_invariance_check(fn([1, 1, 2]), fn([0, 5, 5]))
    assert pairing_value_invariance_check(fn([3, 1, 2]), fn([7, 9, 8]))
    assert pairing_value_invariance_check(fn([3, 1, 2]), fn([4, 4, 4]))
    big = fn([i % 4 for i in range(12)]), fn([i % 3 for i in range(12)])
    assert pairing_value_invariance_check(*big, rng=CounterRNG(1, 1))


def test_chebyshev_examples():
    assert chebyshev_lower(fn([1, 2]), fn([0, 1])) == (2, Fraction(3, 2))
    lhs, rhs = chebyshev_lower(fn([5, 1, 3]), fn([2, 2, 2]))
    assert lhs == rhs
    assert chebyshev_lower(fn([-1, 1]), fn([-1, 1])) == (2, 0)
    with pytest.raises(NotSimilarlyOrderedError):
        OrderedPair(fn([1, 2]), fn([1, 0]))


def test_abs_sup_examples():
    rep = abs_sup_bound_check(fn([0, 1, 3]), fn([1, 0, 2]))
    assert rep.lhs == sup_pairing(fn([0, 1, 3]), fn([1, 0, 2])).value and rep.holds
    rep = abs_sup_bound_check(fn([-1, 1]), fn([0, 1]))
    assert (rep.lhs, rep.rhs) == (1, 3)
    rep = abs_sup_bound_check(fn([-1, 4]), fn([0, 0]))
    assert rep.lhs == 0 and rep.holds


def test_product_abs_examples():
    rep = product_abs_bound_check(fn([-1, 1]), fn([-1, 1]))
    assert rep.lhs == 2 and rep.rhs == 14 and rep.holds
    f0 = fn([-2, 1, 3])
    rep = product_abs_bound_check(f0, fn([1, 1, 1]))
    assert rep.lhs == integrate(abs(f0)) and rep.holds


def test_conv1_examples():
    f = fn([0, 2, 5])
    assert conv1_average_on(f, range(3)).values == (Fraction(7, 3),) * 3
    assert conv1_average_on(f, []) == f
    assert conv1_average_on(f, [0, 1]).values == (1, 1, 5)


def test_two_block_examples():
    f = fn([0, 2, 5, 1])
    S = [0, 1]
    assert conv1_two_block(f, S, S) == conv1_average_on(conv1_average_on(f, S), [2, 3])
    assert conv1_two_block(fn([4, 0]), [0], [1]).values == (0, 4)
    assert conv1_two_block(f, [], []).values == (2,) * 4
    with pytest.raises(ValueError):
        conv1_two_block(f, [0], [1, 2])


def test_lower_bound_examples():
    f = fn([3, -1, 2, 0])
    xi = fn([1, 2, 0, 4])
    bound, sup = pairing_lower_bound(f, xi, [0, 2, 3, 1], range(4))
    assert bound == average(f) * integrate(xi) and sup >= bound
    top = fn([3, 2, 0, -1])
    bound, sup = pairing_lower_bound(top, fn([1, 2, 3, 0]), [0, 1, 2], [0, 1, 2])
    assert bound == average(top, [0, 1, 2]) * 6
    c = fn([2, 2, 2])
    bound, sup = pairing_lower_bound(c, fn([1, -2, 0]), [0], [0])
    assert bound == sup == -2
    assert pairing_lower_bound(fn([1, -1]), fn([1, -1]), [0], [0]) == (2, 2)
    with pytest.raises(ValueError):
        pairing_lower_bound(fn([1, -1]), fn([-1, 1]), [0], [0])


def test_katok_examples():
    xi = fn([0, 0.3, 0.6, 0.9])
    eta = xi.permuted([2, 0, 3, 1])
    plan = katok_transport(xi, eta, 0.5)
    plan.validate(xi.space)
    assert plan.error == 0 and plan.bound == 1.5 and plan.holds
    assert plan.interval_length < 0.5 / 4
    same = katok_transport(xi, xi, 0.01)
    assert same.permutation == (0, 1, 2, 3) and same.error == 0
    with pytest.raises(ValueError):
        katok_transport(xi, fn([0, 0.3, 0.6, 1.0]), 0.5)


@settings(max_examples=150)
@given(equal_mass_pair(max_cells=6))
def test_sup_pairing_matches_oracle(pair):
    phi, psi = pair
    p = sup_pairing(phi, psi)
    assert p.value == brute_sup(phi, psi)[0]
    assert p.value == sup_pairing(psi, phi).value
    assert similarly_ordered(p.rearranged(phi), psi)


@settings(max_examples=100)
@given(equal_mass_pair(max_cells=6))
def test_inequality_suites_hold_exactly_on_integers(pair):
    phi, psi = pair
    assert abs_sup_bound_check(phi, psi, 0).holds
    assert product_abs_bound_check(phi, psi, 0).holds
    ordered = phi.permuted(sup_pairing(phi, psi).witness)
    lhs, rhs = chebyshev_lower(ordered, psi)
    assert lhs >= rhs


@settings(max_examples=100)
@given(equal_mass_pair(max_cells=5), st.data())
def test_conv1_average_is_orbit_average(pair, data):
    f, _ = pair
    E = data.draw(st.sets(st.integers(0, len(f) - 1)))
    assert conv1_average_on(f, E) == orbit_average(f, E)


@settings(max_examples=100)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=40), st.data())
def test_katok_bound_and_oracle(values, data):
    xi = fn([v / 7 for v in values])
    perm = data.draw(st.permutations(range(len(values))))
    eta = xi.permuted(perm)
    eps = data.draw(st.floats(0.01, 3.0))
    within = data.draw(st.sampled_from(["sorted", "index"]))
    plan = katok_transport(xi, eta, eps, within=within)
    plan.validate(xi.space)
    assert plan.error < 3 * eps
    assert min_matching_error(xi, eta) == 0
    assert equidistributed(xi, eta.permuted(plan.permutation)) or plan.error > 0


def test_mismatched_spaces_rejected():
    with pytest.raises(SpaceMismatchError):
        sup_pairing(fn([1, 2]), fn([1, 2, 3]))
    assert MeasureSpace.uniform(2) == fn([0, 0]).space
