"""Nondegenerate critical points of sampled fields and the functional built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .flow import LinearMap
from .grid import DarbouxBox, GridField
from .quadratic import QuadraticForm, cutoff_phi, det_invariant, smooth_step, t_invariant

__all__ = [
    "CriticalPoint",
    "PReport",
    "NewtonError",
    "ClusteredCriticalPointsError",
    "find_critical_points",
    "p_functional",
    "p_functional_report",
    "counterexample_map",
    "localized_saddle",
    "softened_saddle",
    "image_box",
    "radial_step",
]

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
MIN_SEPARATION = 3.0
# stay this many cells away from a compact_support boundary
EDGE_MARGIN = 2
TRUST_CELLS = 2.0


class NewtonError(ArithmeticError):
    pass


class ClusteredCriticalPointsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    location: tuple
    hessian: QuadraticForm
    det_q: float
    t_q: float
    nondegenerate: bool
    hessian_error: float = 0.0
    t_error: float = 0.0

    @property
    def weighted(self) -> float:
        """``phi(Det Q) t(Q)``."""
        return cutoff_phi(self.det_q) * self.t_q


def _corner_reduce(arr: np.ndarray, op, periodic: bool) -> np.ndarray:
    out = arr
    for axis in range(arr.ndim):
        if periodic:
            out = op(out, np.roll(out, -1, axis=axis))
        else:
            lo = np.take(out, range(out.shape[axis] - 1), axis=axis)
            hi = np.take(out, range(1, out.shape[axis]), axis=axis)
            out = op(lo, hi)
    return out


def _gradient_grids(xi: GridField) -> list[np.ndarray]:
    box = xi.box
    h = box.spacing
    if box.periodic:
        return [
            (np.roll(xi.samples, -1, axis=k) - np.roll(xi.samples, 1, axis=k)) / (2 * h[k])
            for k in range(box.dim)
        ]
    grads = np.gradient(xi.samples, *h, edge_order=2)
    return list(grads) if box.dim > 1 else [grads]


def _candidate_cells(xi: GridField, grads, det_threshold: float) -> np.ndarray:
    """Cells whose corner gradients bracket zero and whose cell Hessian is large enough."""
    box = xi.box
    d = box.dim
    periodic = box.periodic
    mask = None
    scale = max(float(np.max(np.abs(g))) for g in grads)
    if scale == 0.0:
        return np.empty((0, d), dtype=np.int64)
    big = None
    for g in grads:
        lo = _corner_reduce(g, np.minimum, periodic)
        hi = _corner_reduce(g, np.maximum, periodic)
        m = (lo <= 0) & (hi >= 0)
        mask = m if mask is None else mask & m
        amp = np.maximum(-lo, hi)
        big = amp if big is None else np.maximum(big, amp)
    # flat plateaus bracket zero everywhere but carry no critical point
    mask &= big > 1e-9 * scale
    if not periodic:
        for axis in range(d):
            sl = [slice(None)] * d
            sl[axis] = slice(0, EDGE_MARGIN)
            mask[tuple(sl)] = False
            sl[axis] = slice(mask.shape[axis] - EDGE_MARGIN, None)
            mask[tuple(sl)] = False
    cells = np.argwhere(mask)
    if len(cells) == 0:
        return cells
    # cell Hessian from differences of corner gradients
    shape = np.array(xi.samples.shape)
    corners = np.array(list(product((0, 1), repeat=d)))
    idx = cells[:, None, :] + corners[None, :, :]
    if periodic:
        idx = np.mod(idx, shape)
    gathered = np.stack([g[tuple(idx[..., k] for k in range(d))] for g in grads], axis=-1)
    h = box.spacing
    jac = np.empty((len(cells), d, d))
    for j in range(d):
        up = corners[:, j] == 1
        jac[:, :, j] = (gathered[:, up, :].mean(axis=1) - gathered[:, ~up, :].mean(axis=1)) / h[j]
    sym = 0.5 * (jac + np.transpose(jac, (0, 2, 1)))
    dets = np.linalg.det(0.5 * sym)
    return cells[np.abs(dets) >= 0.25 * det_threshold]


def _newton(spline, box: DarbouxBox, starts: np.ndarray) -> np.ndarray:
    """Refine every start; rows of NaN mark starts whose iterate left the trust region.

    A cell where each gradient component changes sign need not contain a
    common zero; Newton then walks away, and such a cell is dropped once the
    iterate is more than ``TRUST_CELLS`` cells from where it started.
    """
    x = starts.copy()
    origin = box.to_index(starts)
    active = np.ones(len(x), dtype=bool)
    lost = np.zeros(len(x), dtype=bool)
    shape = np.array(box.grid)
    for _ in range(NEWTON_MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        _, g, H = spline.derivatives(box.wrap(x[idx]))
        try:
            step = np.linalg.solve(H, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.einsum("mij,mj->mi", np.linalg.pinv(H), g)
        x[idx] = x[idx] - step
        drift = box.to_index(x[idx]) - origin[idx]
        if box.periodic:
            drift = (drift + 0.5 * shape) % shape - 0.5 * shape
        away = np.max(np.abs(drift), axis=1) > TRUST_CELLS
        if not box.periodic:
            u = box.to_index(x[idx])
            away |= np.any((u < 0) | (u > shape - 1), axis=1)
        done = np.max(np.abs(step), axis=1) <= NEWTON_TOL
        lost[idx[away]] = True
        active[idx[away | done]] = False
    if active.any():
        raise NewtonError(f"Newton did not converge for {int(active.sum())} candidate(s)")
    x = box.wrap(x)
    x[lost] = np.nan
    return x


def _index_distance(box: DarbouxBox, a: np.ndarray, b: np.ndarray) -> float:
    diff = box.to_index(a) - box.to_index(b)
    if box.periodic:
        n = np.array(box.grid)
        diff = (diff + 0.5 * n) % n - 0.5 * n
    return float(np.sqrt(np.sum(diff * diff)))


def _stencil_hessian(spline, box: DarbouxBox, point: np.ndarray, cells: float) -> np.ndarray:
    """Five-point central differences of the interpolant at spacing ``cells`` grid cells."""
    d = box.dim
    steps = box.spacing * cells
    offsets = (-2, -1, 1, 2)
    d1 = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}
    d2 = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
    probes = [point]
    for i in range(d):
        for k in offsets:
            p = point.copy()
            p[i] += k * steps[i]
            probes.append(p)
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        for ki in offsets:
            for kj in offsets:
                p = point.copy()
                p[i] += ki * steps[i]
                p[j] += kj * steps[j]
                probes.append(p)
    vals = spline.values(box.wrap(np.array(probes)))
    center, pos = vals[0], 1
    H = np.empty((d, d))
    for i in range(d):
        acc = d2[0] * center
        for k in offsets:
            acc += d2[k] * vals[pos]
            pos += 1
        H[i, i] = acc / (12.0 * steps[i] ** 2)
    for i, j in pairs:
        acc = 0.0
        for ki in offsets:
            for kj in offsets:
                acc += d1[ki] * d1[kj] * vals[pos]
                pos += 1
        H[i, j] = H[j, i] = acc / (144.0 * steps[i] * steps[j])
    return H


def find_critical_points(
    xi: GridField, det_threshold: float = 0.5, min_separation: float = MIN_SEPARATION
) -> list[CriticalPoint]:
    """Critical points of ``xi`` whose Hessian determinant is not negligible.

    Candidate cells are those where every gradient component changes sign
    and whose cell-averaged ``|Det|`` is at least ``det_threshold / 4``.
    Each is refined by Newton's method on the spline interpolant, and the
    Hessian is then taken by five-point differences at spacing two cells
    (error estimate: the change against spacing one cell).  Points with
    ``|Det| >= det_threshold`` are flagged nondegenerate; they must be at
    least ``min_separation`` cells apart.  The result is sorted by location.
    """
    box = xi.box
    grads = _gradient_grids(xi)
    cells = _candidate_cells(xi, grads, det_threshold)
    if len(cells) == 0:
        return []
    spline = xi.spline
    starts = box.from_index(cells + 0.5)
    roots = _newton(spline, box, starts)
    roots = roots[~np.isnan(roots).any(axis=1)]

    if not box.periodic:
        u = box.to_index(roots)
        keep = np.all((u >= EDGE_MARGIN) & (u <= np.array(box.grid) - 1 - EDGE_MARGIN), axis=1)
        roots = roots[keep]
    unique: list[np.ndarray] = []
    for r in roots:
        if all(_index_distance(box, r, q) >= 0.5 for q in unique):
            unique.append(r)

    out = []
    for r in unique:
        H2 = _stencil_hessian(spline, box, r, 2.0)
        H1 = _stencil_hessian(spline, box, r, 1.0)
        Q = QuadraticForm.from_hessian(H2)
        det = det_invariant(Q)
        t = t_invariant(Q)
        out.append(
            CriticalPoint(
                location=tuple(float(v) for v in r),
                hessian=Q,
                det_q=det,
                t_q=t,
                nondegenerate=abs(det) >= det_threshold,
                hessian_error=float(np.max(np.abs(H2 - H1))),
                t_error=abs(t - t_invariant(QuadraticForm.from_hessian(H1))),
            )
        )
    strong = [p for p in out if p.nondegenerate]
    for a in range(len(strong)):
        for b in range(a + 1, len(strong)):
            dist = _index_distance(box, np.array(strong[a].location), np.array(strong[b].location))
            if dist < min_separation:
                raise ClusteredCriticalPointsError(
                    f"critical points {strong[a].location} and {strong[b].location} "
                    f"are {dist:.2f} cells apart"
                )
    out.sort(key=lambda p: p.location)
    return out


@dataclass(frozen=True)
class PReport:
    value: float
    points: list = field(default_factory=list)
    t_error: float = 0.0
    interpolation_error: float = 0.0


def p_functional_report(xi: GridField, det_threshold: float = 0.5) -> PReport:
    """``sum phi(Det Q_x) t(Q_x)`` over critical points with ``|Det| > det_threshold``."""
    points = [
        p
        for p in find_critical_points(xi, det_threshold)
        if p.nondegenerate and abs(p.det_q) > det_threshold
    ]
    value = math.fsum(p.weighted for p in points)
    t_err = math.fsum(abs(cutoff_phi(p.det_q)) * p.t_error for p in points)
    return PReport(value, points, t_err, xi.error)


def p_functional(xi: GridField, det_threshold: float = 0.5) -> float:
    return p_functional_report(xi, det_threshold).value


def counterexample_map(c) -> LinearMap:
    """``(x_k, y_k) -> (e^{c_k} x_k, e^{c_k} y_k)``: volume preserving when ``sum c = 0``."""
    c = [float(v) for v in c]
    if len(c) < 2:
        raise ValueError("the map needs n >= 2")
    if abs(math.fsum(c)) > 1e-12:
        raise ValueError("the exponents must sum to zero")
    scale = np.exp(np.array(c + c))
    return LinearMap(np.diag(scale))


def radial_step(r2, r0: float, r1: float):
    """Smooth radial cutoff in ``|z|^2``: 1 for ``|z| <= r0``, 0 for ``|z| >= r1``."""
    r2 = np.asarray(r2, dtype=float)
    u = (np.sqrt(r2) - r0) / (r1 - r0)
    step = np.vectorize(smooth_step, otypes=[float])
    return 1.0 - step(u)


def localized_saddle(z, scale: float = 2.0, r0: float = 0.5, r1: float = 1.0):
    """``scale * sum x_k y_k`` multiplied by :func:`radial_step`.

    Apart from the origin its critical set consists of orbits of a linear
    circle action and the outer plateau, where the Hessian is degenerate.
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[-1] // 2
    core = scale * np.sum(z[..., :n] * z[..., n:], axis=-1)
    return core * radial_step(np.sum(z * z, axis=-1), r0, r1)


def softened_saddle(z, r0: float = 2.0, r1: float = 5.0):
    """``2 x y / (1 + |z|^2)`` cut off between ``r0`` and ``r1``, for ``n = 1``.

    In two dimensions a localized saddle must have extrema where it returns
    to zero; the slow decay keeps their ``|Det|`` near 0.1, below the
    cutoff of ``phi``.
    """
    z = np.asarray(z, dtype=float)
    return localized_saddle(z, 2.0, r0, r1) / (1.0 + np.sum(z * z, axis=-1))


def image_box(box: DarbouxBox, g: LinearMap) -> DarbouxBox:
    """The box ``g(box)`` for a diagonal linear map, with the same grid."""
    m = g.matrix
    if np.any(m != np.diag(np.diag(m))) or np.any(np.diag(m) <= 0):
        raise ValueError("image_box needs a diagonal map with positive entries")
    scale = np.diag(m)
    extent = tuple((lo * s, hi * s) for (lo, hi), s in zip(box.extent, scale))
    return DarbouxBox(box.n, extent, box.grid, box.boundary)
