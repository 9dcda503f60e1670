"""Hamiltonian flows on a coordinate box and their action on sampled fields."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import ndimage
from scipy.linalg import expm

from .grid import (
    COMPACT,
    PAD,
    DarbouxBox,
    GridField,
    GridTooCoarseError,
    OutsideBoxError,
    SplineField,
)
from .quadratic import QuadraticForm, symplectic_matrix
from .rng import DEFAULT_SEED, CounterRNG

__all__ = [
    "EXACT_LINEAR",
    "LEAPFROG",
    "PhaseMap",
    "LinearMap",
    "AffineMap",
    "ComposedMap",
    "LeapfrogMap",
    "FlowSpec",
    "RegularizerSpec",
    "VolumeReport",
    "NonConvergenceError",
    "sgrad",
    "flow",
    "pullback",
    "volume_check",
    "coordinate_flow",
    "regularize",
    "bump_kernel",
]

EXACT_LINEAR = "exact_linear"
LEAPFROG = "leapfrog"


class NonConvergenceError(ArithmeticError):
    pass


def sgrad(h: Union[GridField, QuadraticForm]):
    """Symplectic gradient ``(dh/dy, -dh/dx)``.

    For a quadratic form this is the exact matrix ``2 J a`` of the linear
    field; for a grid field it is an array of shape ``(2n,) + grid`` built
    from second-order central differences.
    """
    if isinstance(h, QuadraticForm):
        return h.sgrad_matrix()
    box = h.box
    if any(g < 5 for g in box.grid):
        raise GridTooCoarseError("central differences need at least 5 nodes per axis")
    hs = box.spacing
    if box.periodic:
        grads = [
            (np.roll(h.samples, -1, axis=k) - np.roll(h.samples, 1, axis=k)) / (2 * hs[k])
            for k in range(box.dim)
        ]
    else:
        grads = np.gradient(h.samples, *hs, edge_order=2)
        if box.dim == 1:
            grads = [grads]
    n = box.n
    return np.stack([grads[n + k] for k in range(n)] + [-grads[k] for k in range(n)])


class PhaseMap:
    """A diffeomorphism of (a region of) ``R^{2n}`` acting on point arrays."""

    dim: int

    def __call__(self, points) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> "PhaseMap":
        raise NotImplementedError

    def jacobian(self, points) -> np.ndarray:
        """``Dg`` at each point, shape ``(M, 2n, 2n)``; central differences by default."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        delta = 1e-5
        d = self.dim
        m = points.shape[0]
        eye = np.eye(d) * delta
        probes = np.concatenate([points[:, None, :] + eye, points[:, None, :] - eye], axis=1)
        images = self(probes.reshape(-1, d)).reshape(m, 2 * d, d)
        return np.transpose((images[:, :d] - images[:, d:]) / (2 * delta), (0, 2, 1))

    def then(self, other: "PhaseMap") -> "PhaseMap":
        """The map ``other o self`` (apply ``self`` first)."""
        return ComposedMap(self, other)


class AffineMap(PhaseMap):
    """``z -> M z + b``."""

    def __init__(self, matrix, offset=None):
        self.matrix = np.array(matrix, dtype=float)
        d = self.matrix.shape[0]
        if self.matrix.shape != (d, d) or d % 2:
            raise ValueError("matrix must be square of even size")
        self.offset = np.zeros(d) if offset is None else np.array(offset, dtype=float)
        self.dim = d

    def __call__(self, points):
        return np.asarray(points, dtype=float) @ self.matrix.T + self.offset

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.matrix)
        return AffineMap(inv, -inv @ self.offset)

    def jacobian(self, points):
        m = np.atleast_2d(np.asarray(points)).shape[0]
        return np.broadcast_to(self.matrix, (m, self.dim, self.dim)).copy()

    def then(self, other):
        if isinstance(other, AffineMap):
            return AffineMap(other.matrix @ self.matrix, other.matrix @ self.offset + other.offset)
        return ComposedMap(self, other)


class LinearMap(AffineMap):
    def __init__(self, matrix):
        super().__init__(matrix)

    def inverse(self) -> "LinearMap":
        return LinearMap(np.linalg.inv(self.matrix))

    def then(self, other):
        if type(other) is LinearMap:
            return LinearMap(other.matrix @ self.matrix)
        return super().then(other)


class ComposedMap(PhaseMap):
    def __init__(self, first: PhaseMap, second: PhaseMap):
        if first.dim != second.dim:
            raise ValueError("dimension mismatch")
        self.first, self.second, self.dim = first, second, first.dim

    def __call__(self, points):
        return self.second(self.first(points))

    def inverse(self):
        return ComposedMap(self.second.inverse(), self.first.inverse())

    def jacobian(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inner = self.first.jacobian(points)
        outer = self.second.jacobian(self.first(points))
        return outer @ inner


def _gradient_oracle(hamiltonian) -> tuple[int, Callable]:
    if isinstance(hamiltonian, QuadraticForm):
        a2 = 2.0 * hamiltonian.a
        return hamiltonian.n, lambda z: z @ a2
    if isinstance(hamiltonian, GridField):
        spline = hamiltonian.spline
        return hamiltonian.box.n, lambda z: spline.derivatives(z, max_order=1)[1]
    raise TypeError("hamiltonian must be a QuadraticForm or a GridField")


class LeapfrogMap(PhaseMap):
    """Störmer-Verlet integrator for ``z' = J grad H`` with ``x`` as positions.

    The half steps are implicit for non-separable ``H`` and are solved by
    fixed-point iteration.  The scheme is symplectic for the interpolated
    Hamiltonian and symmetric, so the inverse is the same scheme run with
    the opposite time step.
    """

    def __init__(self, hamiltonian, dt: float, steps: int, tol: float = 1e-14, max_iter: int = 200):
        self.hamiltonian = hamiltonian
        n, self._grad = _gradient_oracle(hamiltonian)
        self.n, self.dim = n, 2 * n
        self.dt, self.steps, self.tol, self.max_iter = float(dt), int(steps), tol, max_iter

    def _solve(self, update, start):
        cur = start
        for _ in range(self.max_iter):
            nxt = update(cur)
            if np.max(np.abs(nxt - cur), initial=0.0) <= self.tol * (1.0 + np.max(np.abs(nxt), initial=0.0)):
                return nxt
            cur = nxt
        raise NonConvergenceError("implicit leapfrog stage did not converge")

    def _step(self, x, y):
        n, half = self.n, 0.5 * self.dt

        def grad(xx, yy):
            g = self._grad(np.concatenate([xx, yy], axis=1))
            return g[:, :n], g[:, n:]

        y_half = self._solve(lambda yy: y - half * grad(x, yy)[0], y)
        hy0 = grad(x, y_half)[1]
        x_new = self._solve(lambda xx: x + half * (hy0 + grad(xx, y_half)[1]), x + self.dt * hy0)
        y_new = y_half - half * grad(x_new, y_half)[0]
        return x_new, y_new

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        shape = points.shape
        z = points.reshape(-1, self.dim)
        x, y = z[:, : self.n].copy(), z[:, self.n :].copy()
        for _ in range(self.steps):
            x, y = self._step(x, y)
        return np.concatenate([x, y], axis=1).reshape(shape)

    def inverse(self) -> "LeapfrogMap":
        return LeapfrogMap(self.hamiltonian, -self.dt, self.steps, self.tol, self.max_iter)


@dataclass(frozen=True)
class FlowSpec:
    hamiltonian: object
    duration: float
    steps: int = 1
    method: str = EXACT_LINEAR

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.method not in (EXACT_LINEAR, LEAPFROG):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == EXACT_LINEAR and not isinstance(self.hamiltonian, QuadraticForm):
            raise TypeError("exact_linear flows need a quadratic Hamiltonian")


def flow(spec: FlowSpec) -> PhaseMap:
    """Time-``duration`` map of the Hamiltonian vector field ``J grad H``."""
    if spec.method == EXACT_LINEAR:
        return LinearMap(expm(spec.hamiltonian.sgrad_matrix() * spec.duration))
    return LeapfrogMap(spec.hamiltonian, spec.duration / spec.steps, spec.steps)


def coordinate_flow(n: int, axis: int, t: float) -> AffineMap:
    """Flow for time ``t`` of the Hamiltonian whose field is ``d/dz_axis``.

    That Hamiltonian is ``y_k`` for the axis ``x_k`` and ``-x_k`` for the
    axis ``y_k``; on a chart both flows are translations.
    """
    offset = np.zeros(2 * n)
    offset[axis] = t
    return AffineMap(np.eye(2 * n), offset)


def _error_sample(n_nodes: int, limit: int) -> np.ndarray:
    stride = max(1, n_nodes // limit)
    return np.arange(0, n_nodes, stride)


def pullback(
    g: PhaseMap,
    xi: GridField,
    target: Optional[DarbouxBox] = None,
    allow_extrapolation: bool = False,
    error_samples: int = 20000,
) -> GridField:
    """Sample ``xi o g^{-1}`` at the nodes of ``target`` (default: ``xi``'s box).

    Values come from the cubic spline interpolant of ``xi``.  The returned
    field's ``error`` is twice the largest gap between the cubic and quintic
    interpolants over an evenly strided subset of nodes, plus the error
    already carried by ``xi``.
    """
    box = xi.box
    target = box if target is None else target
    if g.dim != box.dim or target.dim != box.dim:
        raise ValueError("map, field and target box must share a dimension")
    nodes = target.nodes().reshape(-1, box.dim)
    pre = box.wrap(g.inverse()(nodes))
    spline = xi.spline
    values = np.zeros(len(pre))
    inside = np.ones(len(pre), dtype=bool)
    if box.boundary == COMPACT:
        u = box.to_index(pre)
        # tolerate rounding when target nodes map onto the source boundary
        slack = 1e-9
        inside = np.all((u >= -slack) & (u <= np.array(box.grid) - 1 + slack), axis=1)
        if not inside.all() and not allow_extrapolation:
            # the field is taken as zero beyond the box only where it already
            # vanishes at the boundary point closest to each escaping point
            exit_points = np.clip(pre[~inside], box.lower, box.upper)
            scale = max(xi.max_abs(), 1e-300)
            if np.max(np.abs(spline.values(exit_points))) > 1e-12 * scale:
                raise OutsideBoxError(
                    "points leave the box where the field is nonzero near the boundary"
                )
        if allow_extrapolation and not inside.all():
            reach = np.max(np.maximum(-u, u - (np.array(box.grid) - 1)))
            spline = SplineField(xi, pad=max(PAD, int(math.ceil(reach)) + 3))
            inside[:] = True
    values[inside] = spline.values(pre[inside])
    check = _error_sample(len(pre), error_samples)
    check = check[inside[check]]
    gap = 0.0
    if len(check):
        gap = float(np.max(np.abs(values[check] - spline.values(pre[check], order=5))))
    return GridField(target, values.reshape(target.grid), error=2.0 * gap + xi.error)


@dataclass(frozen=True)
class VolumeReport:
    max_jacobian_deviation: float
    samples: int


def volume_check(
    g: PhaseMap,
    samples: int = 64,
    box: Optional[DarbouxBox] = None,
    seed: int = DEFAULT_SEED,
    points=None,
) -> VolumeReport:
    """Largest ``|det Dg - 1|`` over sample points.

    Points are drawn uniformly from the middle half of ``box`` (or of
    ``[-1, 1]^{2n}``) unless given explicitly.
    """
    if points is None:
        rng = CounterRNG(seed, 0)
        u = rng.uniforms(samples * g.dim).reshape(samples, g.dim)
        if box is None:
            lo, hi = -np.ones(g.dim), np.ones(g.dim)
        else:
            mid, half = 0.5 * (box.lower + box.upper), 0.25 * (box.upper - box.lower)
            lo, hi = mid - half, mid + half
        points = lo + (hi - lo) * u
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dets = np.linalg.det(g.jacobian(points))
    return VolumeReport(float(np.max(np.abs(dets - 1.0))), len(points))


def bump_kernel(s):
    """``(1 - s^2)^3`` on ``[-1, 1]``, zero outside (unnormalized)."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 3, 0.0)


@dataclass(frozen=True)
class RegularizerSpec:
    """Mollifier ``R_lam h(x) = int chi(s) h(g^{s/lam}(x)) ds``.

    ``chi`` is the tensor product of the one-dimensional ``kernel``
    (supported in ``[-1, 1]``), normalized to unit mass; the coordinate
    flows are the translations of :func:`coordinate_flow`.
    """

    lam: float
    kernel: Callable = bump_kernel
    nodes: int = 8

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        s, w = self.quadrature()
        if np.any(self.kernel(np.linspace(-1, 1, 201)) < 0):
            raise ValueError("kernel must be nonnegative")
        if abs(float(np.sum(w)) - 1.0) > 1e-8:
            raise ValueError("kernel does not normalize to unit mass")

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes on ``[-1, 1]`` and normalized kernel weights."""
        s, w = np.polynomial.legendre.leggauss(self.nodes)
        fine_s, fine_w = np.polynomial.legendre.leggauss(64)
        mass = float(np.sum(fine_w * self.kernel(fine_s)))
        if not mass > 0:
            raise ValueError("kernel has no mass")
        return s, w * self.kernel(s) / mass


def regularize(spec: RegularizerSpec, h: GridField) -> GridField:
    """Average translates of ``h`` against the kernel, one axis at a time."""
    box = h.box
    s, w = spec.quadrature()
    reach = 1.0 / spec.lam
    width = int(math.ceil(reach / float(np.min(box.spacing)))) + 2
    if h.boundary_layer_max(width) > 1e-12 * max(h.max_abs(), 1e-300):
        raise ValueError("field must vanish within the kernel reach of the boundary")
    mode = "grid-wrap" if box.periodic else "grid-constant"
    out = h.samples
    for axis in range(box.dim):
        acc = np.zeros_like(out)
        for sk, wk in zip(s, w):
            shift = np.zeros(box.dim)
            # output[i] = input[i - shift], so this samples h(x + sk / lam)
            shift[axis] = -sk * reach / box.spacing[axis]
            acc += wk * ndimage.shift(out, shift, order=3, mode=mode)
        out = acc
    return GridField(box, out)


def is_symplectic_map(g: AffineMap, tol: float = 1e-12) -> bool:
    J = symplectic_matrix(g.dim // 2)
    return float(np.max(np.abs(g.matrix.T @ J @ g.matrix - J))) <= tol
