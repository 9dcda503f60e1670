"""Brute-force reference computations.

These deliberately avoid the sorting arguments used by the main modules:
suprema are taken over every permutation, top averages come from a linear
program, and transport errors from an assignment solver.  They are slow and
only meant for small inputs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .measure import DiscreteFunction

__all__ = [
    "permutation_table",
    "brute_sup",
    "brute_sup_pairing",
    "brute_q",
    "lp_top_average",
    "lp_alpha_constants",
    "orbit_average",
    "min_matching_error",
]

MAX_CELLS = 9


@lru_cache(maxsize=None)
def permutation_table(n: int) -> np.ndarray:
    """All permutations of ``range(n)`` as rows, lexicographic."""
    if n > MAX_CELLS:
        raise ValueError(f"refusing to enumerate {n}! permutations")
    return np.array(list(permutations(range(n))), dtype=np.intp).reshape(-1, n)


def _as_array(values) -> np.ndarray:
    vals = list(values)
    if all(isinstance(v, (int, np.integer)) for v in vals):
        return np.array(vals, dtype=object)
    if any(isinstance(v, Fraction) for v in vals):
        return np.array([Fraction(v) for v in vals], dtype=object)
    return np.array(vals, dtype=float)


def brute_sup(phi0: DiscreteFunction, psi: DiscreteFunction, combine=None):
    """Max over all ``sigma`` of ``sum w combine(phi0[sigma], psi)``, with argmax.

    ``combine`` defaults to the product.  Integer and fraction inputs are
    handled exactly.  Requires equal cell masses.
    """
    if phi0.space != psi.space:
        raise ValueError("functions live on different spaces")
    masses = set(phi0.space.masses)
    if len(masses) != 1:
        raise ValueError("brute force needs equal masses")
    w = masses.pop()
    n = len(phi0)
    table = permutation_table(n)
    a = _as_array(phi0.values)[table]
    b = _as_array(psi.values)[None, :]
    terms = a * b if combine is None else combine(a, b)
    sums = terms.sum(axis=1)
    best = int(np.argmax(sums))
    value = sums[best] * w
    return value, tuple(int(i) for i in table[best])


def brute_sup_pairing(phi0: DiscreteFunction, psi: DiscreteFunction):
    return brute_sup(phi0, psi)[0]


def brute_q(family, xi: DiscreteFunction):
    """``max_(a, f) a + max_sigma int (f o sigma) xi``."""
    return max(a + brute_sup(f, xi)[0] for a, f in family.pairs)


def lp_top_average(f: DiscreteFunction, alpha: float, bottom: bool = False) -> float:
    """Largest (smallest) mean of ``f`` over a fractional set of measure ``alpha``.

    Solves ``max sum f_i w_i x_i`` subject to ``0 <= x <= 1`` and
    ``sum w_i x_i = alpha``; at ``alpha = 0`` returns ``max f`` (``min f``).
    """
    vals = np.array([float(v) for v in f.values])
    w = np.array([float(m) for m in f.space.masses])
    total = float(np.sum(w))
    if alpha <= 1e-12 * total:
        return float(vals.min() if bottom else vals.max())
    alpha = min(alpha, total)
    sign = 1.0 if bottom else -1.0
    res = linprog(
        sign * vals * w,
        A_eq=w[None, :],
        b_eq=[alpha],
        bounds=[(0.0, 1.0)] * len(vals),
        method="highs",
    )
    if not res.success:
        raise ArithmeticError(res.message)
    return float(sign * res.fun / alpha)


def lp_alpha_constants(f: DiscreteFunction, grid: int = 401):
    """``(c, m)`` from LP top/bottom averages on a uniform alpha grid plus the
    cumulative-mass breakpoints.

    Minimizing over a finite grid can only overestimate ``c`` and
    underestimate ``m``.
    """
    total = float(f.space.total)
    alphas = set(np.linspace(0.0, total, grid).tolist())
    acc = 0.0
    for m in f.space.masses:
        acc += float(m)
        alphas.add(min(acc, total))
    gaps, sizes = [], []
    for alpha in sorted(alphas):
        s = lp_top_average(f, alpha)
        i = lp_top_average(f, max(total - alpha, 0.0), bottom=True)
        gaps.append(s - i)
        sizes.append(abs(s) + abs(i))
    return 0.5 * min(gaps), 0.5 * max(sizes)


def orbit_average(f: DiscreteFunction, E) -> DiscreteFunction:
    """Average of ``f o sigma`` over all permutations ``sigma`` of the cells in ``E``."""
    E = sorted(set(E))
    vals = [Fraction(v) for v in f.values]
    acc = [Fraction(0)] * len(vals)
    count = 0
    for perm in permutations(E):
        moved = list(vals)
        for src, dst in zip(E, perm):
            moved[dst] = vals[src]
        acc = [x + y for x, y in zip(acc, moved)]
        count += 1
    return f.with_values(tuple(x / count for x in acc))


def min_matching_error(xi: DiscreteFunction, eta: DiscreteFunction) -> float:
    """``min_sigma int |xi - eta o sigma|`` by optimal assignment (equal masses)."""
    x = np.array([float(v) for v in xi.values])
    y = np.array([float(v) for v in eta.values])
    cost = np.abs(x[:, None] - y[None, :])
    rows, cols = linear_sum_assignment(cost)
    w = float(xi.space.masses[0])
    return math.fsum(cost[rows, cols]) * w
