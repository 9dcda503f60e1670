import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlab.flow import (
    AffineMap,
    FlowSpec,
    LeapfrogMap,
    LinearMap,
    RegularizerSpec,
    coordinate_flow,
    flow,
    is_symplectic_map,
    pullback,
    regularize,
    sgrad,
    volume_check,
)
from rlab.grid import DarbouxBox, GridField, OutsideBoxError
from rlab.hessian import counterexample_map
from rlab.quadratic import QuadraticForm, diagonal_type

BOX = DarbouxBox(1, (-2.0, 2.0), 41)


def test_sgrad_of_quadratics():
    assert np.allclose(sgrad(diagonal_type([1.0])) @ [2.0, 3.0], [2.0, -3.0])
    rot = QuadraticForm(0.5 * np.eye(2))
    assert np.allclose(sgrad(rot) @ [2.0, 3.0], [3.0, -2.0])


def test_sgrad_of_grid_fields():
    const = GridField(BOX, np.full(BOX.grid, 4.0))
    assert np.all(sgrad(const) == 0)
    xy = GridField.from_function(BOX, lambda z: z[..., 0] * z[..., 1])
    field = sgrad(xy)
    nodes = BOX.nodes()
    assert np.allclose(field[0], nodes[..., 0]) and np.allclose(field[1], -nodes[..., 1])


def test_exact_flows():
    rot = QuadraticForm(0.5 * np.eye(2))
    g = flow(FlowSpec(rot, math.pi / 2))
    assert np.allclose(g(np.array([1.0, 0.0])), [0.0, -1.0], atol=1e-14)
    assert np.allclose(flow(FlowSpec(rot, 0.0)).matrix, np.eye(2))
    t = 0.7
    hyper = flow(FlowSpec(diagonal_type([1.0]), t))
    assert np.allclose(hyper.matrix, np.diag([math.exp(t), math.exp(-t)]), rtol=1e-13)
    assert is_symplectic_map(hyper)


def test_flow_spec_validation():
    field = GridField(BOX, np.zeros(BOX.grid))
    with pytest.raises(TypeError):
        FlowSpec(field, 1.0)
    with pytest.raises(ValueError):
        FlowSpec(diagonal_type([1.0]), 1.0, steps=0)
    with pytest.raises(ValueError):
        FlowSpec(diagonal_type([1.0]), 1.0, method="euler")


def test_leapfrog_matches_exact_for_quadratics():
    Q = QuadraticForm([[0.5, 0.2], [0.2, 1.0]])
    exact = flow(FlowSpec(Q, 1.0))
    approx = flow(FlowSpec(Q, 1.0, steps=2000, method="leapfrog"))
    pts = np.array([[0.3, -0.2], [1.0, 0.5]])
    assert np.max(np.abs(exact(pts) - approx(pts))) < 1e-5
    assert np.allclose(approx.inverse()(approx(pts)), pts, atol=1e-12)
    assert volume_check(approx, points=pts).max_jacobian_deviation < 1e-8


def test_leapfrog_on_grid_hamiltonian_preserves_volume():
    box = DarbouxBox(1, (-4.0, 4.0), 81)
    H = GridField.from_function(box, lambda z: np.exp(-np.sum(z * z, axis=-1)))
    g = LeapfrogMap(H, 0.01, 100)
    assert volume_check(g, samples=32, box=box, seed=3).max_jacobian_deviation < 1e-6


def test_volume_check():
    assert volume_check(LinearMap(2 * np.eye(2))).max_jacobian_deviation == pytest.approx(3.0)
    g = counterexample_map([1.0, -1.0])
    assert volume_check(g, samples=16).max_jacobian_deviation <= 1e-12
    a = volume_check(g, samples=8, seed=5)
    assert a == volume_check(g, samples=8, seed=5)


def test_pullback_identity_rotation_shear():
    xi = GridField.from_function(BOX, lambda z: np.exp(-2 * np.sum(z * z, axis=-1)))
    same = pullback(LinearMap(np.eye(2)), xi)
    assert np.allclose(same.samples, xi.samples, atol=1e-14)

    box = DarbouxBox(1, (-4.0, 4.0), 81)
    bump = GridField.from_function(box, lambda z: np.exp(-2 * np.sum(z * z, axis=-1)))
    c, s = math.cos(0.4), math.sin(0.4)
    turned = pullback(LinearMap([[c, -s], [s, c]]), bump)
    assert np.max(np.abs(turned.samples - bump.samples)) < 5e-3
    assert turned.error > 0

    xs = GridField.from_function(BOX, lambda z: z[..., 0])
    shear = LinearMap([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(OutsideBoxError):
        pullback(shear, xs)
    sheared = pullback(shear, xs, allow_extrapolation=True)
    nodes = BOX.nodes()
    assert np.allclose(sheared.samples, nodes[..., 0] - nodes[..., 1], atol=1e-9)


def test_pullback_composition():
    box = DarbouxBox(1, (-6.0, 6.0), 121)
    bump = GridField.from_function(box, lambda z: np.exp(-2 * np.sum((z - 0.3) ** 2, axis=-1)))
    f = LinearMap([[1.0, 0.2], [0.0, 1.0]])
    g = flow(FlowSpec(QuadraticForm(0.5 * np.eye(2)), 0.3))
    step = pullback(g, pullback(f, bump))
    once = pullback(f.then(g), bump)
    assert np.max(np.abs(step.samples - once.samples)) <= 2 * max(step.error, once.error)


def test_coordinate_flow_is_translation():
    g = coordinate_flow(2, 3, 0.5)
    assert np.allclose(g(np.zeros(4)), [0, 0, 0, 0.5])
    assert isinstance(g, AffineMap) and is_symplectic_map(g)


def test_regularizer():
    box = DarbouxBox(1, (-4.0, 4.0), 161)
    zero = GridField(box, np.zeros(box.grid))
    spec = RegularizerSpec(2.0)
    assert np.all(regularize(spec, zero).samples == 0)
    bump = GridField.from_function(box, lambda z: np.exp(-4 * np.sum(z * z, axis=-1)))
    smooth = regularize(spec, bump)
    assert smooth.integral() == pytest.approx(bump.integral(), rel=1e-8)
    assert smooth.max_abs() < bump.max_abs()
    wide = GridField.from_function(box, lambda z: np.exp(-0.2 * np.sum(z * z, axis=-1)))
    with pytest.raises(ValueError):
        regularize(spec, wide)
    with pytest.raises(ValueError):
        RegularizerSpec(0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_counterexample_map_property(c, t):
    g = counterexample_map([c, -c])
    pts = np.array([[t, 1.0, -t, 0.5]])
    assert volume_check(g, points=pts).max_jacobian_deviation <= 1e-12
    assert np.allclose(g.inverse()(g(pts)), pts)
