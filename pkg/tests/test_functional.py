from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import equal_mass_pair, fn, rational_function
from rlab.functional import (
    FIXED,
    OVER_REARRANGEMENTS,
    ConstantFamilyError,
    NoBranchError,
    SupportFamily,
    alpha_curves,
    evaluate,
    family_l1_crosscheck,
    family_l1_norm_bound,
    l1_lower_bound,
    lipschitz_report,
    minkowski_functional,
    ri_norm,
    ri_norm_axiom_report,
)
from rlab.measure import decreasing_rearrangement, integrate
from rlab.oracles import brute_q, brute_sup, lp_alpha_constants, lp_top_average

HALF = Fraction(1, 2)


def halves_family(n=2, mass=HALF):
    f = fn([1] * (n // 2) + [-1] * (n // 2), [mass] * n)
    return SupportFamily(((0, f),)), f


def sign_family(n, shift=0, closed=False):
    fs = [fn([1 if (m >> i) & 1 else -1 for i in range(n)]) for m in range(1 << n)]
    return SupportFamily(tuple((shift, f) for f in fs), rearrangement_closed=closed)


def test_evaluate_examples():
    f = fn([3, -1, 2])
    fam = SupportFamily(((0, f),))
    assert evaluate(fam, f, OVER_REARRANGEMENTS) == brute_sup(f, f)[0] == 14
    const = SupportFamily(((5, fn([0, 0, 0])),))
    assert evaluate(const, fn([1, -7, 2])) == 5
    ones = SupportFamily(((0, fn([1, 1, 1])),))
    assert evaluate(ones, fn([1, -7, 2]), FIXED) == -4


def test_evaluate_rejects_foreign_space():
    fam, _ = halves_family()
    with pytest.raises(ValueError):
        evaluate(fam, fn([1, 2, 3]))


def test_alpha_curves_halves():
    _, f = halves_family()
    ac = alpha_curves(f)
    assert ac.c == HALF and ac.m == 1
    for alpha, s in zip(ac.alphas, ac.s):
        if alpha <= HALF:
            assert s == 1
        else:
            assert s == (1 - alpha) / alpha
    assert ac.s_total == ac.i[-1] == 0


def test_alpha_curves_constant_and_small():
    ac = alpha_curves(fn([4, 4, 4]))
    assert set(ac.s) == set(ac.i) == {4} and ac.c == 0
    ac = alpha_curves(fn([3, 1]))
    lookup = dict(zip(ac.alphas, ac.s))
    assert lookup[1] == 3 and lookup[2] == 2 and lookup[0] == 3


@settings(max_examples=25, deadline=None)
@given(rational_function(max_cells=5))
def test_alpha_curves_against_lp_and_profile(f):
    ac = alpha_curves(f)
    prof = decreasing_rearrangement(f)
    for alpha, s, i in zip(ac.alphas, ac.s, ac.i):
        assert s >= i
        assert float(s) == pytest.approx(lp_top_average(f, float(alpha)), abs=1e-9)
        assert float(i) == pytest.approx(lp_top_average(f, float(alpha), bottom=True), abs=1e-9)
        if alpha > 0:
            assert s * alpha == prof.top_integral(alpha)
    if not f.is_constant():
        oc, om = lp_alpha_constants(f, grid=51)
        assert float(ac.c) <= oc + 1e-9 and float(ac.m) >= om - 1e-9
        assert ac.c > 0


def test_l1_bound_examples():
    fam, f = halves_family()
    rep = l1_lower_bound(fam, f)
    assert rep.branch == "zero" and rep.b == HALF
    assert rep.q_value == 1 and rep.bound == 0.5 and rep.holds
    zero = fn([0, 0], [HALF, HALF])
    rep = l1_lower_bound(fam, zero)
    assert rep.bound == rep.a0 == 0 and rep.q_value >= rep.bound
    with pytest.raises(ConstantFamilyError):
        l1_lower_bound(SupportFamily(((0, fn([1, 1])),)), fn([1, -1]))
    with pytest.raises(NoBranchError):
        l1_lower_bound(fam, fn([1, 2], [HALF, HALF]))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-8, 8), min_size=6, max_size=6), st.sampled_from([0, 1, -1]))
def test_l1_bound_against_brute_force(values, shift):
    f = fn([1, 1, 1, -1, -1, -1])
    g = fn([2, 1, 1, 0, 0, 0])
    fam = SupportFamily(((0, f), (0, g), (0, -g)))
    mean = Fraction(sum(values), 6)
    xi = fn([Fraction(v) - mean + shift for v in values])
    rep = l1_lower_bound(fam, xi)
    assert rep.q_value == brute_q(fam, xi)
    assert rep.q_value >= rep.bound


def test_family_l1_norm_examples():
    fam, f = halves_family()
    assert family_l1_norm_bound(fam) == 1
    assert family_l1_norm_bound(SupportFamily(((0, fn([-3, -3], [1, 2])),))) == 9
    assert family_l1_norm_bound(SupportFamily(((0, fn([0, 0])),))) == 0
    fam4 = SupportFamily(((0, fn([1, 1, -1, -1])),))
    checks = family_l1_crosscheck(fam4, fn([2, 0, 0, 0]))
    assert all(c.holds for c in checks)


def test_minkowski_examples():
    l1 = sign_family(4)
    xi = fn([1.5, -0.5, 0.25, -0.75])
    assert minkowski_functional(l1, 1, xi) == pytest.approx(3.0, rel=1e-9)
    assert minkowski_functional(l1, 1, fn([0, 0, 0, 0])) == 0
    assert minkowski_functional(sign_family(4, shift=1), 2, xi) == pytest.approx(3.0, rel=1e-9)
    with pytest.raises(ValueError):
        minkowski_functional(sign_family(4, shift=1), 1, xi)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(0.1, 10))
def test_minkowski_homogeneous(values, t):
    fam = SupportFamily(((1, fn([1, 1, -1, -1])), (0, fn([2, 0, 0, -1]))))
    xi = fn(values)
    q = minkowski_functional(fam, 2, xi)
    assert minkowski_functional(fam, 2, xi * t) == pytest.approx(t * q, rel=1e-9, abs=1e-12)
    if evaluate(fam, xi) < 2:
        assert q <= 1 + 1e-9


def test_ri_norm_examples():
    fam, _ = halves_family()
    assert ri_norm(fam, fn([0, 0], [HALF, HALF])) == 0
    ones = SupportFamily(((0, fn([1, 1, 1])),))
    assert ri_norm(ones, fn([1, -4, 2])) == 7
    assert ri_norm(SupportFamily(((0, fn([2, 1])),)), fn([1, 3])) == 7


@settings(max_examples=60)
@given(equal_mass_pair(min_cells=2, max_cells=6), st.data())
def test_ri_norm_rearrangement_invariant(pair, data):
    f, zeta = pair
    fam = SupportFamily(((0, f),))
    perm = data.draw(st.permutations(range(len(zeta))))
    assert ri_norm(fam, zeta) == ri_norm(fam, abs(zeta).permuted(perm))


@settings(max_examples=60)
@given(equal_mass_pair(min_cells=2, max_cells=6), st.data())
def test_evaluate_invariant_and_convex(pair, data):
    f, xi = pair
    eta = data.draw(st.lists(st.integers(-6, 6), min_size=len(f), max_size=len(f)))
    eta = xi.with_values(eta)
    fam = SupportFamily(((1, f), (0, -f)))
    perm = data.draw(st.permutations(range(len(xi))))
    assert evaluate(fam, xi) == evaluate(fam, xi.permuted(perm))
    for lam in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        mix = xi * lam + eta * (1 - lam)
        assert evaluate(fam, mix) <= lam * evaluate(fam, xi) + (1 - lam) * evaluate(fam, eta)


def test_axiom_report_halves():
    fam, _ = halves_family(6, 1)
    rep = ri_norm_axiom_report(fam, trials=200, seed=3)
    assert rep.holds, {k: v for k, v in rep.checks.items() if not v.holds}
    assert rep.b_lower == HALF
    with pytest.raises(ConstantFamilyError):
        ri_norm_axiom_report(SupportFamily(((0, fn([1, 1])),)), trials=2)


def test_lipschitz_examples():
    f = fn([2, -1, 0.5, 0])
    lin = lipschitz_report(SupportFamily(((0, f),), rearrangement_closed=False), 1.0, trials=100)
    assert lin.max_ratio <= float(integrate(abs(f))) + 1e-12
    fam, _ = halves_family(6, 1)
    rep = lipschitz_report(fam, 1.0, trials=100)
    assert rep.holds and rep.pairs_used == 100
    with pytest.raises(ValueError):
        lipschitz_report(fam, 0.0)


def test_sup_on_cube_matches_enumeration():
    fam = SupportFamily(((0, fn([3, -1, 2])), (1, fn([0, 1, -2]))))
    rep = lipschitz_report(fam, 1.0, trials=5)
    top = max(
        float(evaluate(fam, fn(list(v))))
        for v in product([2.0, -2.0], repeat=3)
    )
    assert rep.M == pytest.approx(top)
