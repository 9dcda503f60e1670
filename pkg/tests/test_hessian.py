import math

import numpy as np
import pytest

from rlab.flow import LinearMap, pullback
from rlab.grid import DarbouxBox, GridField
from rlab.hessian import (
    counterexample_map,
    find_critical_points,
    image_box,
    localized_saddle,
    p_functional,
    p_functional_report,
    softened_saddle,
)


def field(fn, extent, grid, boundary="compact_support", n=1):
    return GridField.from_function(DarbouxBox(n, extent, grid, boundary), fn)


def test_saddle_at_origin():
    xi = field(lambda z: 2 * z[..., 0] * z[..., 1], (-1.0, 1.0), 41)
    pts = find_critical_points(xi)
    assert len(pts) == 1
    p = pts[0]
    assert np.allclose(p.location, 0.0, atol=1e-9)
    assert p.det_q == pytest.approx(-1.0, rel=1e-9)
    assert p.t_q == pytest.approx(32.0, rel=1e-9)
    assert p.weighted == pytest.approx(-32.0, rel=1e-9)


def test_linear_field_has_no_critical_points():
    xi = field(lambda z: 3 * z[..., 0] - z[..., 1] + 1, (-1.0, 1.0), 21)
    assert find_critical_points(xi) == []
    assert p_functional(xi) == 0.0


def test_periodic_cosines():
    xi = field(lambda z: np.cos(z[..., 0]) * np.cos(z[..., 1]), (0.0, 2 * math.pi), 64, "periodic")
    pts = find_critical_points(xi, det_threshold=0.1)
    assert len(pts) == 8
    assert all(p.nondegenerate for p in pts)
    dets = sorted(p.det_q for p in pts)
    assert dets == pytest.approx([-0.25] * 4 + [0.25] * 4, rel=1e-3)
    # every |Det| = 1/4 lies where the cutoff vanishes
    assert p_functional(xi, det_threshold=0.1) == 0.0
    # the default threshold discards them all
    assert p_functional_report(xi).points == []


def test_softened_saddle_functional():
    xi = field(softened_saddle, (-5.2, 5.2), 161)
    report = p_functional_report(xi)
    assert len(report.points) == 1
    assert report.value == pytest.approx(-32.0, rel=0.02)


def test_two_copies_add():
    one = field(lambda z: localized_saddle(z - np.array([-2.0, 0.0]), r0=0.3, r1=1.0), ((-4, 4), (-2, 2)), (161, 81))
    two = field(
        lambda z: localized_saddle(z - np.array([-2.0, 0.0]), r0=0.3, r1=1.0)
        + localized_saddle(z - np.array([2.0, 0.0]), r0=0.3, r1=1.0),
        ((-4, 4), (-2, 2)),
        (161, 81),
    )
    single = p_functional_report(one)
    double = p_functional_report(two)
    saddles = [p for p in double.points if p.det_q < 0]
    assert len(saddles) == 2
    assert math.fsum(p.weighted for p in saddles) == pytest.approx(
        2 * math.fsum(p.weighted for p in single.points if p.det_q < 0), rel=1e-6
    )


def test_small_sup_norm_keeps_value():
    # shrinking the box by sigma and the field by sigma^2 keeps every Hessian
    values = []
    for sigma in (1.0, 0.25):
        xi = field(lambda z, s=sigma: s * s * softened_saddle(z / s), (-5.2 * sigma, 5.2 * sigma), 161)
        values.append((xi.max_abs(), p_functional(xi)))
    assert values[1][0] == pytest.approx(values[0][0] / 16, rel=1e-12)
    assert values[1][1] == pytest.approx(values[0][1], rel=1e-6)
    assert values[0][1] == pytest.approx(-32.0, rel=0.02)


def test_counterexample_map():
    g = counterexample_map([0.5, -0.5])
    assert np.allclose(np.diag(g.matrix), np.exp([0.5, -0.5, 0.5, -0.5]))
    assert abs(np.linalg.det(g.matrix) - 1) < 1e-12
    assert np.array_equal(counterexample_map([0.0, 0.0]).matrix, np.eye(4))
    with pytest.raises(ValueError):
        counterexample_map([1.0, 0.0])
    with pytest.raises(ValueError):
        counterexample_map([0.0])


def test_image_box():
    box = DarbouxBox(1, (-1.0, 1.0), 11)
    moved = image_box(box, LinearMap(np.diag([2.0, 0.5])))
    assert moved.extent == ((-2.0, 2.0), (-0.5, 0.5)) and moved.grid == box.grid
    with pytest.raises(ValueError):
        image_box(box, LinearMap(np.array([[1.0, 1.0], [0.0, 1.0]])))


def test_pullback_by_dilation_scales_invariants():
    n_grid = 121
    xi = field(lambda z: 2 * z[..., 0] * z[..., 1], (-1.0, 1.0), n_grid)
    g = LinearMap(np.diag([2.0, 2.0]))
    moved = pullback(g, xi, target=image_box(xi.box, g))
    (p,) = find_critical_points(moved, det_threshold=0.01)
    assert p.det_q == pytest.approx(-1.0 / 16, rel=1e-6)
    assert p.t_q == pytest.approx(32.0 / 16, rel=1e-6)
