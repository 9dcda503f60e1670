"""Finite measure spaces and the functions that live on them.

A :class:`MeasureSpace` is a list of positive cell masses; a
:class:`DiscreteFunction` attaches one real value to every cell.  Values and
masses may be ``int``, :class:`fractions.Fraction` or ``float``.  Integer and
rational data are summed exactly; as soon as a float is involved sums go
through :func:`math.fsum`, which is correctly rounded and therefore
independent of summation order.
"""

from __future__ import annotations

import bisect
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

__all__ = [
    "MeasureSpace",
    "DiscreteFunction",
    "DistributionProfile",
    "exact_sum",
    "integrate",
    "average",
    "distribution_mass",
    "equidistributed",
    "decreasing_rearrangement",
    "reparameterize_theta",
    "positive_part",
    "negative_part",
]

Subset = Optional[Iterable[int]]

RELATIONS: dict[str, Callable] = {
    ">": operator.gt,
    ">=": operator.ge,
    "≥": operator.ge,
    "<": operator.lt,
    "<=": operator.le,
    "≤": operator.le,
    "=": operator.eq,
    "==": operator.eq,
}


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _scalar(x):
    # numpy scalars would silently turn exact arithmetic into float64
    if hasattr(x, "item") and not isinstance(x, (int, float, Fraction)):
        x = x.item()
    if isinstance(x, bool):
        x = int(x)
    return x


def exact_sum(xs: Iterable):
    """Sum exactly for int/Fraction input, correctly rounded otherwise."""
    xs = list(xs)
    if all(_is_exact(x) for x in xs):
        return sum(xs, 0)
    return math.fsum(xs)


@dataclass(frozen=True)
class MeasureSpace:
    """Finitely many atoms with positive masses."""

    masses: tuple

    def __post_init__(self):
        masses = tuple(_scalar(m) for m in self.masses)
        if not masses:
            raise ValueError("a measure space needs at least one cell")
        for i, m in enumerate(masses):
            if not isinstance(m, (int, float, Fraction)):
                raise TypeError(f"mass {i} has unsupported type {type(m).__name__}")
            if not (m > 0) or (isinstance(m, float) and not math.isfinite(m)):
                raise ValueError(f"mass {i} must be positive and finite, got {m!r}")
        object.__setattr__(self, "masses", masses)

    @classmethod
    def uniform(cls, n: int, mass=1) -> "MeasureSpace":
        return cls((mass,) * n)

    @property
    def n_cells(self) -> int:
        return len(self.masses)

    @property
    def total(self):
        return exact_sum(self.masses)

    @property
    def equal_mass(self) -> bool:
        first = self.masses[0]
        return all(m == first for m in self.masses)

    def check_subset(self, subset: Subset) -> list[int]:
        if subset is None:
            return list(range(self.n_cells))
        idx = sorted(set(int(i) for i in subset))
        if idx and (idx[0] < 0 or idx[-1] >= self.n_cells):
            raise IndexError(f"cell index out of range for {self.n_cells} cells")
        return idx

    def mass(self, subset: Subset = None):
        return exact_sum(self.masses[i] for i in self.check_subset(subset))

    def __len__(self):
        return self.n_cells


@dataclass(frozen=True)
class DiscreteFunction:
    """One real value per cell of ``space``."""

    space: MeasureSpace
    values: tuple

    def __post_init__(self):
        values = tuple(_scalar(v) for v in self.values)
        if len(values) != self.space.n_cells:
            raise ValueError(
                f"{len(values)} values for a space with {self.space.n_cells} cells"
            )
        for v in values:
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("function values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Sequence, masses: Optional[Sequence] = None):
        values = tuple(values)
        if masses is None:
            masses = (1,) * len(values)
        return cls(MeasureSpace(tuple(masses)), values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def map(self, fn: Callable) -> "DiscreteFunction":
        return DiscreteFunction(self.space, tuple(fn(v) for v in self.values))

    def with_values(self, values: Sequence) -> "DiscreteFunction":
        return DiscreteFunction(self.space, tuple(values))

    def permuted(self, perm: Sequence[int]) -> "DiscreteFunction":
        """The function ``x -> self[perm[x]]``."""
        return DiscreteFunction(self.space, tuple(self.values[j] for j in perm))

    def _other(self, other):
        if isinstance(other, DiscreteFunction):
            if other.space != self.space:
                raise ValueError("functions live on different spaces")
            return other.values
        return (other,) * len(self.values)

    def __neg__(self):
        return self.map(operator.neg)

    def __abs__(self):
        return self.map(abs)

    def __add__(self, other):
        return self.with_values(a + b for a, b in zip(self.values, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(a - b for a, b in zip(self.values, self._other(other)))

    def __mul__(self, other):
        return self.with_values(a * b for a, b in zip(self.values, self._other(other)))

    __rmul__ = __mul__

    def is_constant(self) -> bool:
        return all(v == self.values[0] for v in self.values)


@dataclass(frozen=True)
class DistributionProfile:
    """Decreasing, left-continuous step function on ``[0, total]``.

    ``breakpoints[k] = (value_k, cum_k)`` means the function equals
    ``value_k`` on ``(cum_{k-1}, cum_k]`` (with ``cum_{-1} = 0``).
    """

    breakpoints: tuple

    def __post_init__(self):
        bps = tuple((v, c) for v, c in self.breakpoints)
        if not bps:
            raise ValueError("empty profile")
        for (v0, c0), (v1, c1) in zip(bps, bps[1:]):
            if not (v1 < v0 and c1 > c0):
                raise ValueError("values must strictly decrease, masses strictly increase")
        if not bps[0][1] > 0:
            raise ValueError("first cumulative mass must be positive")
        object.__setattr__(self, "breakpoints", bps)

    @property
    def total(self):
        return self.breakpoints[-1][1]

    @property
    def values(self) -> tuple:
        return tuple(v for v, _ in self.breakpoints)

    @property
    def cumulative(self) -> tuple:
        return tuple(c for _, c in self.breakpoints)

    def __call__(self, s):
        if s < 0 or s > self.total:
            raise ValueError(f"s={s} outside [0, {self.total}]")
        if s <= 0:
            # upper semicontinuous at the left end
            return self.breakpoints[0][0]
        k = bisect.bisect_left(self.cumulative, s)
        return self.breakpoints[k][0]

    def pieces(self):
        """Yield ``(value, lo, hi)`` for each constant piece ``(lo, hi]``."""
        lo = 0
        for v, c in self.breakpoints:
            yield v, lo, c
            lo = c

    def as_function(self) -> DiscreteFunction:
        """The profile as a function on cells of masses ``hi - lo``."""
        pieces = list(self.pieces())
        return DiscreteFunction(
            MeasureSpace(tuple(hi - lo for _, lo, hi in pieces)),
            tuple(v for v, _, _ in pieces),
        )

    def top_integral(self, alpha):
        """Integral of the profile over ``[0, alpha]``."""
        acc = []
        for v, lo, hi in self.pieces():
            if alpha <= lo:
                break
            acc.append(v * (min(hi, alpha) - lo))
        return exact_sum(acc)


def integrate(f: DiscreteFunction, subset: Subset = None):
    """``sum_{i in subset} f_i w_i``; zero for the empty subset."""
    idx = f.space.check_subset(subset)
    w = f.space.masses
    return exact_sum(f.values[i] * w[i] for i in idx)


def average(f: DiscreteFunction, subset: Subset = None):
    """Mean of ``f`` over ``subset``, taken to be 0 on null sets."""
    idx = f.space.check_subset(subset)
    mass = f.space.mass(idx)
    if mass == 0:
        return 0
    total = integrate(f, idx)
    if _is_exact(total) and _is_exact(mass):
        return Fraction(total) / Fraction(mass)
    return total / mass


def distribution_mass(f: DiscreteFunction, t, relation: str = ">"):
    try:
        rel = RELATIONS[relation]
    except KeyError:
        raise ValueError(f"unknown relation {relation!r}") from None
    w = f.space.masses
    return exact_sum(w[i] for i, v in enumerate(f.values) if rel(v, t))


def _value_masses(f: DiscreteFunction) -> dict:
    buckets: dict = {}
    for v, w in zip(f.values, f.space.masses):
        buckets.setdefault(v, []).append(w)
    return {v: exact_sum(ws) for v, ws in buckets.items()}


def equidistributed(f: DiscreteFunction, g: DiscreteFunction, mass_tol=0) -> bool:
    """True iff every value carries the same mass under ``f`` and ``g``.

    Values are compared exactly; ``mass_tol`` only loosens the comparison
    of the masses.
    """
    a, b = _value_masses(f), _value_masses(g)
    if a.keys() != b.keys():
        return False
    if mass_tol == 0:
        return all(a[v] == b[v] for v in a)
    return all(abs(a[v] - b[v]) <= mass_tol for v in a)


def decreasing_rearrangement(f: DiscreteFunction) -> DistributionProfile:
    vm = _value_masses(f)
    bps = []
    acc = []
    for v in sorted(vm, reverse=True):
        acc.append(vm[v])
        bps.append((v, exact_sum(acc)))
    return DistributionProfile(tuple(bps))


def reparameterize_theta(zeta: DiscreteFunction) -> DiscreteFunction:
    """Measure-preserving map to ``[0, mu(X)]`` built from an injective ``zeta``.

    ``theta_i`` is the mass of the cells where ``zeta < zeta_i``.  The
    pushforward of the cell masses along ``theta`` lays the cells end to end
    on the segment, so it is the uniform measure up to the cell
    granularity.
    """
    vals = zeta.values
    if len(set(vals)) != len(vals):
        raise ValueError("reparameterize_theta needs an injective function; ties found")
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    theta = [0] * len(vals)
    acc = []
    for i in order:
        theta[i] = exact_sum(acc) if acc else 0
        acc.append(zeta.space.masses[i])
    return zeta.with_values(theta)


def positive_part(f: DiscreteFunction) -> DiscreteFunction:
    return f.map(lambda v: v if v > 0 else 0 * v)


def negative_part(f: DiscreteFunction) -> DiscreteFunction:
    return f.map(lambda v: -v if v < 0 else 0 * v)
