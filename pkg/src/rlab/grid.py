"""Sampled fields on a coordinate box and their cubic B-spline interpolants."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import ndimage

__all__ = [
    "PERIODIC",
    "COMPACT",
    "DarbouxBox",
    "GridField",
    "SplineField",
    "GridTooCoarseError",
    "OutsideBoxError",
]

PERIODIC = "periodic"
COMPACT = "compact_support"
MIN_NODES = 4
# nodes of linear extrapolation added around a compact_support grid
PAD = 4


class GridTooCoarseError(ValueError):
    pass


class OutsideBoxError(ValueError):
    pass


@dataclass(frozen=True)
class DarbouxBox:
    """Axis-aligned box in ``R^{2n}`` with a regular grid.

    Axes are ordered ``x_1..x_n, y_1..y_n``.  A ``compact_support`` grid
    includes both endpoints of every interval; a ``periodic`` grid omits the
    upper one.
    """

    n: int
    extent: tuple
    grid: tuple
    boundary: str = COMPACT

    def __post_init__(self):
        d = 2 * int(self.n)
        if self.n < 1:
            raise ValueError("n must be at least 1")
        extent = tuple(self.extent)
        if len(extent) == 2 and not isinstance(extent[0], (tuple, list)):
            extent = (tuple(extent),) * d
        extent = tuple((float(lo), float(hi)) for lo, hi in extent)
        grid = tuple(self.grid) if isinstance(self.grid, (tuple, list)) else (self.grid,) * d
        grid = tuple(int(g) for g in grid)
        if len(extent) != d or len(grid) != d:
            raise ValueError(f"need {d} extents and grid sizes")
        if any(not hi > lo for lo, hi in extent):
            raise ValueError("every extent must have hi > lo")
        if any(g < MIN_NODES for g in grid):
            raise GridTooCoarseError(f"grid needs at least {MIN_NODES} nodes per axis")
        if self.boundary not in (PERIODIC, COMPACT):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "grid", grid)

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.extent])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.extent])

    @property
    def spacing(self) -> np.ndarray:
        span = self.upper - self.lower
        cells = np.array(self.grid) - (0 if self.periodic else 1)
        return span / cells

    def axes(self) -> list[np.ndarray]:
        h = self.spacing
        return [lo + h[k] * np.arange(g) for k, ((lo, _), g) in enumerate(zip(self.extent, self.grid))]

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``grid + (2n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def to_index(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.lower) / self.spacing

    def from_index(self, index) -> np.ndarray:
        return self.lower + np.asarray(index, dtype=float) * self.spacing

    def wrap(self, points) -> np.ndarray:
        """Reduce periodic coordinates into ``[lo, hi)``."""
        points = np.asarray(points, dtype=float)
        if not self.periodic:
            return points
        span = self.upper - self.lower
        return self.lower + np.mod(points - self.lower, span)

    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def quadrature_weights(self) -> list[np.ndarray]:
        """Per-axis trapezoid weights (uniform for periodic grids)."""
        out = []
        for h, g in zip(self.spacing, self.grid):
            w = np.full(g, h)
            if not self.periodic:
                w[0] = w[-1] = 0.5 * h
            out.append(w)
        return out


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of a function at the nodes of ``box``.

    ``error`` is an estimate of the pointwise sampling error carried by
    the samples (zero for fields sampled from a formula).
    """

    box: DarbouxBox
    samples: np.ndarray
    error: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != self.box.grid:
            raise ValueError(f"samples shape {samples.shape} != grid {self.box.grid}")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, box: DarbouxBox, fn) -> "GridField":
        """Sample ``fn`` given the stacked coordinates ``(..., 2n)``."""
        return cls(box, fn(box.nodes()))

    def integral(self) -> float:
        out = self.samples
        for w in reversed(self.box.quadrature_weights()):
            out = out @ w
        return float(out)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def boundary_layer_max(self, width: int) -> float:
        """Largest ``|sample|`` within ``width`` nodes of the box boundary."""
        if self.box.periodic:
            return 0.0
        s = np.abs(self.samples)
        worst = 0.0
        for axis in range(s.ndim):
            w = min(width, s.shape[axis])
            lo = np.take(s, range(w), axis=axis)
            hi = np.take(s, range(s.shape[axis] - w, s.shape[axis]), axis=axis)
            worst = max(worst, float(lo.max()), float(hi.max()))
        return worst

    @cached_property
    def spline(self) -> "SplineField":
        return SplineField(self)


def _bspline_weights(t: np.ndarray, order: int) -> np.ndarray:
    """Cubic B-spline weights (or derivatives) for offsets -1..2, shape ``(M, 4)``."""
    if order == 0:
        s = 1.0 - t
        return np.stack(
            [s**3 / 6, (3 * t**3 - 6 * t**2 + 4) / 6, (-3 * t**3 + 3 * t**2 + 3 * t + 1) / 6, t**3 / 6],
            axis=-1,
        )
    if order == 1:
        return np.stack(
            [-((1 - t) ** 2) / 2, (3 * t**2 - 4 * t) / 2, (-3 * t**2 + 2 * t + 1) / 2, t**2 / 2],
            axis=-1,
        )
    if order == 2:
        return np.stack([1 - t, 3 * t - 2, 1 - 3 * t, t], axis=-1)
    raise ValueError("only derivatives up to order 2")


class SplineField:
    """Tensor-product cubic B-spline interpolant of a :class:`GridField`.

    Compact-support grids are extended by ``pad`` nodes of linear
    extrapolation on every side (exact for fields that vanish near the
    boundary and for affine fields); periodic grids wrap.
    """

    def __init__(self, field: GridField, pad: int = PAD):
        self.field = field
        box = field.box
        self.box = box
        if box.periodic:
            self.pad = 0
            data = field.samples
            self._mode = "grid-wrap"
        else:
            self.pad = int(pad)
            data = np.pad(field.samples, self.pad, mode="reflect", reflect_type="odd")
            self._mode = "mirror"
        self.data = data
        self.coeffs = ndimage.spline_filter(data, order=3, mode=self._mode)

    def _index(self, points) -> np.ndarray:
        u = self.box.to_index(points) + self.pad
        if not self.box.periodic:
            limit = np.array(self.data.shape) - 1
            if np.any(u < 1) or np.any(u > limit - 1):
                raise OutsideBoxError("points outside the interpolation range")
        return u

    def values(self, points, order: int = 3) -> np.ndarray:
        """Interpolated values at ``points`` of shape ``(..., 2n)``."""
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        u = self._index(points.reshape(-1, points.shape[-1]))
        if order == 3:
            out = ndimage.map_coordinates(
                self.coeffs, u.T, order=3, prefilter=False, mode=self._mode
            )
        else:
            out = ndimage.map_coordinates(self.data, u.T, order=order, mode=self._mode)
        return out.reshape(shape)

    def _gather(self, u: np.ndarray):
        base = np.floor(u).astype(np.int64) - 1
        t = u - np.floor(u)
        d = u.shape[1]
        offsets = np.stack(np.meshgrid(*([np.arange(4)] * d), indexing="ij"), axis=-1).reshape(-1, d)
        idx = base[:, None, :] + offsets[None, :, :]
        if self.box.periodic:
            idx = np.mod(idx, np.array(self.coeffs.shape))
        block = self.coeffs[tuple(idx[..., k] for k in range(d))]
        return block.reshape((u.shape[0],) + (4,) * d), t

    def _contract(self, block: np.ndarray, weights: Sequence[np.ndarray]) -> np.ndarray:
        out = block
        for w in weights:
            out = np.einsum("mj,mj...->m...", w, out)
        return out

    def derivatives(self, points, max_order: int = 2):
        """``(values, gradients, hessians)`` of the interpolant at ``points``.

        ``points`` has shape ``(M, 2n)``; gradients ``(M, 2n)``; hessians
        ``(M, 2n, 2n)``.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        u = self._index(points)
        block, t = self._gather(u)
        d = u.shape[1]
        h = self.box.spacing
        w = [[_bspline_weights(t[:, k], o) for o in range(max_order + 1)] for k in range(d)]

        def combo(orders):
            scale = np.prod([h[k] ** orders[k] for k in range(d)])
            return self._contract(block, [w[k][orders[k]] for k in range(d)]) / scale

        vals = combo([0] * d)
        grads = np.stack([combo([1 if k == j else 0 for k in range(d)]) for j in range(d)], axis=-1)
        if max_order < 2:
            return vals, grads, None
        hess = np.empty((points.shape[0], d, d))
        for i in range(d):
            for j in range(i, d):
                orders = [0] * d
                orders[i] += 1
                orders[j] += 1
                hess[:, i, j] = hess[:, j, i] = combo(orders)
        return vals, grads, hess
