import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlab.quadratic import (
    QuadraticForm,
    ad_matrix,
    compose_linear,
    cutoff_phi,
    det_invariant,
    diagonal_type,
    is_symplectic,
    monomial_basis,
    poisson_bracket,
    random_symplectic,
    smooth_step,
    t_closed_form,
    t_invariant,
)
from rlab.rng import CounterRNG

XY = diagonal_type([1.0])
XX = QuadraticForm([[1.0, 0.0], [0.0, 0.0]])
YY = QuadraticForm([[0.0, 0.0], [0.0, 1.0]])


def random_form(rng, n):
    m = rng.normals(4 * n * n).reshape(2 * n, 2 * n)
    return QuadraticForm(0.5 * (m + m.T))


def test_form_validation():
    with pytest.raises(ValueError):
        QuadraticForm([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        QuadraticForm(np.eye(3))
    assert XY(np.array([2.0, 3.0])) == 6.0


def test_bracket_examples():
    assert np.all(poisson_bracket(XY, XY).a == 0)
    assert np.allclose(poisson_bracket(XY, XX).a, (2 * XX).a)
    assert np.allclose(poisson_bracket(XY, YY).a, (-2 * YY).a)
    with pytest.raises(ValueError):
        poisson_bracket(XY, diagonal_type([1.0, 1.0]))


def test_bracket_matches_directional_derivative():
    rng = CounterRNG(4, 4)
    Q, R = random_form(rng, 2), random_form(rng, 2)
    z = rng.normals(4)
    expected = Q.sgrad_matrix() @ z @ R.gradient(z)
    assert poisson_bracket(Q, R)(z) == pytest.approx(expected, rel=1e-12)


def test_t_examples():
    assert t_invariant(XY) == 8
    assert t_invariant(QuadraticForm.zero(2)) == 0
    assert t_invariant(diagonal_type([2.0, 2.0])) == pytest.approx(96)
    assert len(monomial_basis(2)) == 10 and ad_matrix(XY).shape == (3, 3)


def test_det_examples():
    assert det_invariant(XY) == pytest.approx(-0.25)
    assert det_invariant(diagonal_type([2.0])) == pytest.approx(-1.0)
    assert det_invariant(QuadraticForm.zero(1)) == 0


def test_compose_examples():
    Q = diagonal_type([2.0])
    assert np.allclose(compose_linear(Q, np.eye(2)).a, Q.a)
    c = 0.3
    moved = compose_linear(Q, np.diag([math.exp(c)] * 2))
    assert np.allclose(moved.a, diagonal_type([2 * math.exp(2 * c)]).a)
    with pytest.raises(np.linalg.LinAlgError):
        compose_linear(Q, np.zeros((2, 2)))


def test_cutoff_phi_examples():
    assert cutoff_phi(0.3) == 0 and cutoff_phi(-0.5) == 0
    assert cutoff_phi(2) == 2 and cutoff_phi(-3) == -3 and cutoff_phi(1) == 1
    assert cutoff_phi(0.75) == pytest.approx(0.375)
    grid = np.linspace(0.5, 1.0, 101)
    vals = [cutoff_phi(s) for s in grid]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert all(cutoff_phi(-s) == -cutoff_phi(s) for s in grid)
    assert smooth_step(-1) == 0 and smooth_step(2) == 1 and smooth_step(0.5) == pytest.approx(0.5)


@settings(max_examples=200)
@given(st.lists(st.floats(-10, 10, allow_subnormal=False), min_size=1, max_size=3))
def test_t_closed_form_property(q):
    exact = t_closed_form(q)
    assert t_invariant(diagonal_type(q)) == pytest.approx(exact, rel=1e-9, abs=1e-12)


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.sampled_from([1, 2]))
def test_symplectic_invariance_property(seed, n):
    rng = CounterRNG(seed, 0)
    Q = random_form(rng, n)
    S = random_symplectic(n, rng)
    assert is_symplectic(S, tol=1e-9 * max(1.0, np.abs(S).max() ** 2))
    assert t_invariant(compose_linear(Q, S)) == pytest.approx(t_invariant(Q), rel=1e-6)


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.sampled_from([1, 2]))
def test_det_transforms_with_det_squared(seed, n):
    rng = CounterRNG(seed, 1)
    Q = random_form(rng, n)
    S = rng.normals(4 * n * n).reshape(2 * n, 2 * n)
    d = np.linalg.det(S)
    assert det_invariant(compose_linear(Q, S)) == pytest.approx(d * d * det_invariant(Q), rel=1e-8, abs=1e-12)


def test_volume_preserving_map_changes_t_not_det():
    Q = diagonal_type([2.0, 2.0])
    D = np.diag(np.exp([1.0, -1.0, 1.0, -1.0]))
    moved = compose_linear(Q, D)
    assert t_invariant(moved) / t_invariant(Q) == pytest.approx((math.exp(4) + math.exp(-4)) / 2, rel=1e-9)
    assert det_invariant(moved) / det_invariant(Q) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100)
@given(st.integers(0, 2**32))
def test_jacobi_identity(seed):
    rng = CounterRNG(seed, 2)
    n = 1 + seed % 2
    A, B, C = (random_form(rng, n) for _ in range(3))
    total = (
        poisson_bracket(A, poisson_bracket(B, C))
        + poisson_bracket(B, poisson_bracket(C, A))
        + poisson_bracket(C, poisson_bracket(A, B))
    )
    assert np.max(np.abs(total.a)) <= 1e-10
