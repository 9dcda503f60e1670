"""Suprema over rearrangement classes and the inequalities built on them.

Everything here works on equal-mass spaces, where a rearrangement is just a
permutation of the cells.  :func:`split_to_equal_mass` brings functions on a
rational-mass space to that form without changing their distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .measure import (
    DiscreteFunction,
    MeasureSpace,
    average,
    equidistributed,
    exact_sum,
    integrate,
    negative_part,
    positive_part,
)

__all__ = [
    "SpaceMismatchError",
    "NotSimilarlyOrderedError",
    "OrderedPair",
    "Pairing",
    "InequalityReport",
    "TransportPlan",
    "split_to_equal_mass",
    "similarly_ordered",
    "sup_pairing",
    "pairing_value_invariance_check",
    "chebyshev_lower",
    "abs_sup_bound_check",
    "product_abs_bound_check",
    "conv1_average_on",
    "conv1_two_block",
    "pairing_lower_bound",
    "katok_transport",
]

DEFAULT_REL_TOL = 1e-9


class SpaceMismatchError(ValueError):
    pass


class NotSimilarlyOrderedError(ValueError):
    pass


def _as_fraction(m) -> Fraction:
    if isinstance(m, float):
        # shortest round-trip decimal, so 0.1 means 1/10
        return Fraction(repr(m))
    return Fraction(m)


def split_to_equal_mass(
    fs: Sequence[DiscreteFunction], max_cells: int = 100_000
) -> list[DiscreteFunction]:
    """Refine a shared rational-mass space into equal cells.

    Cell ``i`` of mass ``k_i * q`` becomes ``k_i`` consecutive cells of mass
    ``q``, where ``q`` is the largest common quantum of all masses.
    """
    fs = list(fs)
    if not fs:
        return []
    space = fs[0].space
    for f in fs[1:]:
        if f.space != space:
            raise SpaceMismatchError("split_to_equal_mass needs a shared space")
    if space.equal_mass:
        return fs
    fr = [_as_fraction(m) for m in space.masses]
    denom = math.lcm(*(x.denominator for x in fr))
    ints = [int(x * denom) for x in fr]
    g = math.gcd(*ints)
    counts = [k // g for k in ints]
    n_cells = sum(counts)
    if n_cells > max_cells:
        raise ValueError(
            f"refinement needs {n_cells} cells (max_cells={max_cells}); "
            "mass ratios are not small rationals"
        )
    quantum = Fraction(g, denom)
    new_space = MeasureSpace((quantum,) * n_cells)
    out = []
    for f in fs:
        vals = []
        for v, k in zip(f.values, counts):
            vals.extend([v] * k)
        out.append(DiscreteFunction(new_space, tuple(vals)))
    return out


def _require_equal_mass(*fs: DiscreteFunction) -> MeasureSpace:
    space = fs[0].space
    for f in fs[1:]:
        if f.space != space:
            raise SpaceMismatchError("functions live on different spaces")
    if not space.equal_mass:
        raise SpaceMismatchError(
            "an equal-mass space is required; call split_to_equal_mass first"
        )
    return space


def _desc_order(values: Sequence) -> list[int]:
    # ties broken by original index so witnesses are reproducible
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def similarly_ordered(phi: DiscreteFunction, psi: DiscreteFunction) -> bool:
    order = sorted(range(len(phi)), key=lambda i: (phi[i], psi[i]))
    ps = [psi[i] for i in order]
    return all(a <= b for a, b in zip(ps, ps[1:]))


@dataclass(frozen=True)
class OrderedPair:
    phi: DiscreteFunction
    psi: DiscreteFunction

    def __post_init__(self):
        if self.phi.space != self.psi.space:
            raise SpaceMismatchError("pair members live on different spaces")
        if not similarly_ordered(self.phi, self.psi):
            raise NotSimilarlyOrderedError("phi and psi are not similarly ordered")


@dataclass(frozen=True)
class Pairing:
    """Best pairing value and the permutation realizing it.

    The maximizing rearrangement is ``phi0.permuted(witness)``.
    """

    value: object
    witness: tuple

    def rearranged(self, phi0: DiscreteFunction) -> DiscreteFunction:
        return phi0.permuted(self.witness)


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool
    tolerance: float


def _holds(lhs, rhs, rel_tol) -> bool:
    if rel_tol == 0:
        return lhs <= rhs
    return lhs <= rhs + rel_tol * max(1.0, abs(rhs), abs(lhs))


def sup_pairing(phi0: DiscreteFunction, psi: DiscreteFunction) -> Pairing:
    """Largest ``int phi psi`` over rearrangements ``phi`` of ``phi0``.

    Both functions are sorted in decreasing order and paired position by
    position.
    """
    _require_equal_mass(phi0, psi)
    witness = [0] * len(phi0)
    for i, j in zip(_desc_order(psi.values), _desc_order(phi0.values)):
        witness[i] = j
    phi = phi0.permuted(witness)
    return Pairing(integrate(phi * psi), tuple(witness))


def _distinct_permutations(values: Sequence):
    """Distinct orderings of a multiset, as index tuples (lexicographic)."""
    n = len(values)
    order = sorted(range(n), key=lambda i: (values[i], i))
    seq = [values[i] for i in order]
    idx = list(order)
    yield tuple(idx)
    while True:
        k = n - 2
        while k >= 0 and not seq[k] < seq[k + 1]:
            k -= 1
        if k < 0:
            return
        j = n - 1
        while not seq[k] < seq[j]:
            j -= 1
        seq[k], seq[j] = seq[j], seq[k]
        idx[k], idx[j] = idx[j], idx[k]
        seq[k + 1 :] = reversed(seq[k + 1 :])
        idx[k + 1 :] = reversed(idx[k + 1 :])
        yield tuple(idx)


def pairing_value_invariance_check(
    phi0: DiscreteFunction,
    psi0: DiscreteFunction,
    rng=None,
    trials: int = 64,
    enumerate_up_to: int = 8,
) -> bool:
    """Check that all similarly ordered rearrangement pairs give one value.

    Applying one permutation to both members changes nothing, so ``psi`` is
    pinned to ``psi0`` and only ``phi`` varies.  Small spaces are enumerated
    exhaustively; larger ones compare the sorted pairing against random
    similarly ordered witnesses (random tie-breaking on both sides).
    """
    _require_equal_mass(phi0, psi0)
    n = len(phi0)
    reference = sup_pairing(phi0, psi0).value
    if n <= enumerate_up_to:
        for perm in _distinct_permutations(phi0.values):
            phi = phi0.permuted(perm)
            if similarly_ordered(phi, psi0) and integrate(phi * psi0) != reference:
                return False
        return True
    if rng is None:
        from .rng import CounterRNG

        rng = CounterRNG(0, 0)
    for _ in range(trials):
        keys = [rng.uniform() for _ in range(n)]
        cells = sorted(range(n), key=lambda i: (psi0[i], keys[i]))
        keys = [rng.uniform() for _ in range(n)]
        sources = sorted(range(n), key=lambda i: (phi0[i], keys[i]))
        perm = [0] * n
        for c, s in zip(cells, sources):
            perm[c] = s
        phi = phi0.permuted(perm)
        if not similarly_ordered(phi, psi0) or integrate(phi * psi0) != reference:
            return False
    return True


def chebyshev_lower(phi: DiscreteFunction, psi: DiscreteFunction):
    """``(int phi psi, avg(phi) * int psi)`` for a similarly ordered pair."""
    pair = OrderedPair(phi, psi)
    lhs = integrate(pair.phi * pair.psi)
    rhs = average(pair.phi) * integrate(pair.psi)
    return lhs, rhs


def abs_sup_bound_check(
    phi0: DiscreteFunction, psi: DiscreteFunction, rel_tol: float = DEFAULT_REL_TOL
) -> InequalityReport:
    """Compare ``sup int |phi| psi`` with its three-term upper bound."""
    _require_equal_mass(phi0, psi)
    lhs = sup_pairing(abs(phi0), psi).value
    rhs = (
        sup_pairing(phi0, psi).value
        + sup_pairing(-phi0, psi).value
        + average(abs(phi0)) * integrate(psi)
    )
    return InequalityReport(lhs, rhs, _holds(lhs, rhs, rel_tol), rel_tol)


def product_abs_bound_check(
    f0: DiscreteFunction, xi: DiscreteFunction, rel_tol: float = DEFAULT_REL_TOL
) -> InequalityReport:
    """``sup int |f xi| <= 4 sup |int f xi| + 3 avg|f0| int|xi|``."""
    _require_equal_mass(f0, xi)
    lhs = sup_pairing(abs(f0), abs(xi)).value
    sup_abs = max(sup_pairing(f0, xi).value, sup_pairing(-f0, xi).value)
    rhs = 4 * sup_abs + 3 * average(abs(f0)) * integrate(abs(xi))
    return InequalityReport(lhs, rhs, _holds(lhs, rhs, rel_tol), rel_tol)


def conv1_average_on(f: DiscreteFunction, E: Iterable[int]) -> DiscreteFunction:
    """Replace ``f`` on ``E`` by its mean there."""
    idx = set(f.space.check_subset(E))
    if not idx:
        return f
    mean = average(f, idx)
    return f.with_values(mean if i in idx else v for i, v in enumerate(f.values))


def conv1_two_block(f: DiscreteFunction, S: Iterable[int], T: Iterable[int]):
    """Two-valued function: mean of ``f`` on ``S`` placed on ``T``, mean off ``S`` off ``T``."""
    S = set(f.space.check_subset(S))
    T = set(f.space.check_subset(T))
    if f.space.mass(S) != f.space.mass(T):
        raise ValueError("S and T must have equal mass")
    inside = average(f, S)
    outside = average(f, set(range(len(f))) - S)
    return f.with_values(inside if i in T else outside for i in range(len(f)))


def pairing_lower_bound(
    f: DiscreteFunction, xi: DiscreteFunction, S: Iterable[int], T: Iterable[int]
):
    """Lower bound for ``sup int (f o g) xi`` from a two-block competitor.

    Returns ``(bound, sup)``; ``sup >= bound`` is the claim being checked.
    """
    _require_equal_mass(f, xi)
    S = set(f.space.check_subset(S))
    T = set(f.space.check_subset(T))
    if f.space.mass(S) != f.space.mass(T):
        raise ValueError("S and T must have equal mass")
    for i, v in enumerate(xi.values):
        if (i in T and v < 0) or (i not in T and v > 0):
            raise ValueError("xi must be >= 0 on T and <= 0 off T")
    rest = set(range(len(f))) - S
    bound = average(f, S) * integrate(positive_part(xi)) - average(f, rest) * integrate(
        negative_part(xi)
    )
    return bound, sup_pairing(f, xi).value


@dataclass(frozen=True)
class TransportPlan:
    """Cell permutation ``g`` matching ``xi`` to ``eta o g`` level by level.

    ``source_sets[i]`` are the cells where ``xi`` falls in ``intervals[i]``
    and ``target_sets[i]`` the cells where ``eta`` does; ``g`` maps the
    former onto the latter.
    """

    permutation: tuple
    intervals: tuple
    source_sets: tuple
    target_sets: tuple
    epsilon: float
    interval_length: float
    error: object
    bound: float
    unmatched: tuple = field(default=())

    @property
    def holds(self) -> bool:
        return self.error < self.bound

    def validate(self, space: MeasureSpace) -> None:
        n = space.n_cells
        if sorted(self.permutation) != list(range(n)):
            raise AssertionError("permutation is not a bijection")
        for sets in (self.source_sets, self.target_sets):
            seen: set = set()
            for s in sets:
                if seen & set(s):
                    raise AssertionError("level sets overlap")
                seen |= set(s)
        for K, L in zip(self.source_sets, self.target_sets):
            if len(K) != len(L) or {self.permutation[i] for i in K} != set(L):
                raise AssertionError("g does not carry K_i onto L_i")
        total = space.total
        for lo, hi in self.intervals:
            if not hi - lo < self.epsilon / total:
                raise AssertionError("interval too long")
        for (_, hi), (lo, _) in zip(self.intervals, self.intervals[1:]):
            if lo < hi:
                raise AssertionError("intervals overlap")


def katok_transport(
    xi: DiscreteFunction,
    eta: DiscreteFunction,
    epsilon: float,
    within: str = "sorted",
) -> TransportPlan:
    """Build a cell permutation ``g`` with ``int |xi - eta o g| < 3 eps``.

    The value range is cut into half-open intervals of length
    ``eps / (2 mu(X))``.  Equidistribution makes the preimages of each
    interval equally large, so they can be matched bijectively.  Inside an
    interval cells are paired in value order (``within="sorted"``) or in
    index order (``within="index"``); either way each cell contributes less
    than one interval length to the error.
    """
    space = _require_equal_mass(xi, eta)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not equidistributed(xi, eta):
        raise ValueError("katok_transport needs equidistributed functions")
    if within not in ("sorted", "index"):
        raise ValueError("within must be 'sorted' or 'index'")
    total = float(space.total)
    length = epsilon / (2.0 * total)
    lo = min(float(v) for v in xi.values)

    def bucket(v) -> int:
        return math.floor((float(v) - lo) / length)

    src: dict[int, list[int]] = {}
    dst: dict[int, list[int]] = {}
    for i, v in enumerate(xi.values):
        src.setdefault(bucket(v), []).append(i)
    for i, v in enumerate(eta.values):
        dst.setdefault(bucket(v), []).append(i)

    perm: list[Optional[int]] = [None] * len(xi)
    intervals, sources, targets = [], [], []
    leftovers_src, leftovers_dst = [], []
    for k in sorted(set(src) | set(dst)):
        K, L = src.get(k, []), dst.get(k, [])
        if within == "sorted":
            K = sorted(K, key=lambda i: (xi[i], i))
            L = sorted(L, key=lambda i: (eta[i], i))
        m = min(len(K), len(L))
        for a, b in zip(K[:m], L[:m]):
            perm[a] = b
        leftovers_src += K[m:]
        leftovers_dst += L[m:]
        if m:
            intervals.append((lo + k * length, lo + (k + 1) * length))
            sources.append(tuple(sorted(K[:m])))
            targets.append(tuple(sorted(L[:m])))
    # only reachable if float bucketing split equal values differently
    leftovers_src.sort(key=lambda i: (xi[i], i))
    leftovers_dst.sort(key=lambda i: (eta[i], i))
    for a, b in zip(leftovers_src, leftovers_dst):
        perm[a] = b
    perm_t = tuple(perm)
    error = integrate(abs(xi - eta.permuted(perm_t)))
    return TransportPlan(
        permutation=perm_t,
        intervals=tuple(intervals),
        source_sets=tuple(sources),
        target_sets=tuple(targets),
        epsilon=epsilon,
        interval_length=length,
        error=error,
        bound=3 * epsilon,
        unmatched=tuple(leftovers_src),
    )
