"""Convex functionals given as suprema of affine pairings.

A :class:`SupportFamily` is a finite list of pairs ``(a, f)``; it induces
``p(xi) = max a + int f xi``.  When the family is treated as closed under
rearrangements (the default) every ``f`` stands for its whole orbit and the
pairing is replaced by its supremum over the orbit, computed by
:func:`rlab.rearrange.sup_pairing`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .measure import DiscreteFunction, average, exact_sum, integrate
from .rearrange import SpaceMismatchError, sup_pairing
from .rng import CounterRNG

__all__ = [
    "ConstantFamilyError",
    "NoBranchError",
    "SupportFamily",
    "AlphaCurves",
    "L1Bound",
    "AxiomReport",
    "LipschitzReport",
    "evaluate",
    "alpha_curves",
    "l1_lower_bound",
    "family_l1_norm_bound",
    "family_l1_crosscheck",
    "minkowski_functional",
    "ri_norm",
    "ri_norm_axiom_report",
    "lipschitz_report",
]

FIXED = "fixed"
OVER_REARRANGEMENTS = "over_rearrangements"


class ConstantFamilyError(ValueError):
    """Every function in the family is constant, so ``p`` only sees ``int xi``."""


class NoBranchError(ValueError):
    pass


@dataclass(frozen=True)
class SupportFamily:
    pairs: tuple
    rearrangement_closed: bool = True

    def __post_init__(self):
        pairs = tuple((a, f) for a, f in self.pairs)
        if not pairs:
            raise ValueError("a support family needs at least one pair")
        space = pairs[0][1].space
        if any(f.space != space for _, f in pairs):
            raise SpaceMismatchError("all functions of a family must share a space")
        object.__setattr__(self, "pairs", pairs)

    @property
    def space(self):
        return self.pairs[0][1].space

    @property
    def homogeneous(self) -> bool:
        return all(a == 0 for a, _ in self.pairs)

    @property
    def functions(self) -> list:
        return [f for _, f in self.pairs]

    def default_mode(self) -> str:
        return OVER_REARRANGEMENTS if self.rearrangement_closed else FIXED


def _pairing(f, xi, mode):
    if mode == FIXED:
        return integrate(f * xi)
    if mode == OVER_REARRANGEMENTS:
        return sup_pairing(f, xi).value
    raise ValueError(f"unknown mode {mode!r}")


def evaluate(family: SupportFamily, xi: DiscreteFunction, mode: Optional[str] = None):
    """``max_{(a, f)} a + <f, xi>`` with the pairing chosen by ``mode``."""
    mode = mode or family.default_mode()
    if xi.space != family.space:
        raise SpaceMismatchError("xi does not live on the family's space")
    return max(a + _pairing(f, xi, mode) for a, f in family.pairs)


def _linear_part(family: SupportFamily, xi, mode=None):
    mode = mode or family.default_mode()
    return max(_pairing(f, xi, mode) for _, f in family.pairs)


@dataclass(frozen=True)
class AlphaCurves:
    """Top and bottom averages of ``f`` as functions of the set measure.

    ``s[k]`` is the largest mean of ``f`` over a set of measure
    ``alphas[k]``, ``i[k]`` the smallest.  ``c`` and ``m`` are half the
    minimum of ``s_alpha - i_{M - alpha}`` and half the maximum of
    ``|s_alpha| + |i_{M - alpha}|`` over ``alpha`` in ``[0, M]``; both are
    exact, using the breakpoints plus the interior stationary points of each
    rational piece (``critical_alphas``).
    """

    alphas: tuple
    s: tuple
    i: tuple
    c: float
    m: float
    total: object
    critical_alphas: tuple = ()

    @property
    def s_total(self):
        """``s`` at the full measure, the mean of ``f``."""
        return self.s[-1]


def _segments(f: DiscreteFunction):
    """Decreasing rearrangement as ``(value, alpha_lo, alpha_hi, P(alpha_lo))``."""
    vm: dict = {}
    for v, w in zip(f.values, f.space.masses):
        vm.setdefault(v, []).append(w)
    segs = []
    alpha_parts: list = []
    p_parts: list = []
    for v in sorted(vm, reverse=True):
        w = exact_sum(vm[v])
        lo = exact_sum(alpha_parts) if alpha_parts else 0
        p_lo = exact_sum(p_parts) if p_parts else 0
        alpha_parts.append(w)
        p_parts.append(v * w)
        segs.append((v, lo, exact_sum(alpha_parts), p_lo))
    return segs


def _div(a, b):
    from fractions import Fraction

    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) / Fraction(b)
    return a / b


def alpha_curves(f: DiscreteFunction) -> AlphaCurves:
    segs = _segments(f)
    M = f.space.total
    F = integrate(f)
    vmax, vmin = segs[0][0], segs[-1][0]

    def top(alpha):
        # integral of the largest values over measure alpha
        for v, lo, hi, p_lo in segs:
            if alpha <= hi:
                return p_lo + v * (alpha - lo)
        return F

    def s_at(alpha):
        return vmax if alpha == 0 else _div(top(alpha), alpha)

    def i_at(alpha):
        # bottom average over measure alpha
        return vmin if alpha == 0 else _div(F - top(M - alpha), alpha)

    breaks = sorted({0, M} | {hi for _, _, hi, _ in segs} | {M - hi for _, _, hi, _ in segs})
    grid = list(breaks)
    for a, b in zip(breaks, breaks[1:]):
        grid.append(_div(a + b, 2))
    grid = sorted(set(grid))

    # Exact extrema of d = s_a - i_{M-a} and e = s_a + i_{M-a}: on a piece
    # with value v, s = v + A/a and i_{M-a} = v + C/(M-a).
    critical = []
    Mf = float(M)
    for v, lo, hi, p_lo in segs:
        v, lo, hi = float(v), float(lo), float(hi)
        A = float(p_lo) - v * lo
        C = float(F) - A - v * Mf
        cands = []
        if A != 0:
            for ratio in (-C / A, C / A):
                if ratio > 0:
                    cands.append(Mf / (1.0 + math.sqrt(ratio)))
        if v != 0:
            cands += [-A / v, Mf + C / v]
        critical += [a for a in cands if lo < a < hi]

    def d_and_abs(alpha):
        s, i = float(s_at(alpha)), float(i_at(M - alpha))
        return s - i, abs(s) + abs(i)

    vals = [d_and_abs(a) for a in breaks + critical]
    c = 0.5 * min(d for d, _ in vals)
    m = 0.5 * max(e for _, e in vals)
    if f.is_constant():
        c = 0.0
    return AlphaCurves(
        alphas=tuple(grid),
        s=tuple(s_at(a) for a in grid),
        i=tuple(i_at(a) for a in grid),
        c=c,
        m=m,
        total=M,
        critical_alphas=tuple(sorted(critical)),
    )


@dataclass(frozen=True)
class L1Bound:
    a0: float
    b: float
    bound: float
    q_value: float
    branch: str
    holds: bool
    tolerance: float
    pair_index: int = -1


def _integral_is_zero(xi) -> bool:
    total = integrate(xi)
    if total == 0:
        return True
    return abs(total) <= 1e-12 * max(1.0, float(integrate(abs(xi))))


def _branch_constants(family: SupportFamily, branch: str):
    """Best ``(a0, b, index)`` for ``branch`` over the pairs and, if needed, mixtures."""
    pairs = family.pairs
    best = None

    def consider(a, f, idx):
        nonlocal best
        if f.is_constant():
            return
        ac = alpha_curves(f)
        mean = float(ac.s_total)
        if branch == "zero":
            b = ac.c
        elif branch == "positive":
            if not mean > 0:
                return
            b = mean * ac.c / (mean + ac.m)
        else:
            if not mean < 0:
                return
            b = ac.c * abs(mean) / (abs(mean) + ac.m)
        a0 = 0.0 if family.homogeneous else float(a)
        if b > 0 and (best is None or (b, a0) > (best[1], best[0])):
            best = (a0, b, idx)

    for k, (a, f) in enumerate(pairs):
        consider(a, f, k)
    if best is None and branch != "zero":
        # A mixture of a nonconstant f with a pair of the right mean sign is
        # dominated by the family, so its constants are admissible too.
        sign = 1 if branch == "positive" else -1
        for j, (a1, f1) in enumerate(pairs):
            if not sign * integrate(f1) > 0:
                continue
            for k, (a0_, f0) in enumerate(pairs):
                if f0.is_constant():
                    continue
                for t in (0.25, 0.5, 0.75):
                    mix = f0 * t + f1 * (1 - t)
                    consider(a0_ * t + a1 * (1 - t), mix, -1)
    return best


def l1_lower_bound(
    family: SupportFamily, xi: DiscreteFunction, rel_tol: float = 1e-9
) -> L1Bound:
    """Lower bound ``q(xi) >= a0 + b int|xi|`` for the rearrangement-closed family.

    The branch follows the sign of ``int xi``; the positive (negative) branch
    also needs ``q(lambda) -> inf`` as ``lambda -> +inf`` (``-inf``), which
    for a finite family holds iff some pair has ``int f > 0`` (``< 0``).
    """
    if all(f.is_constant() for f in family.functions):
        raise ConstantFamilyError(
            "all functions are constant: p(xi) depends on int xi only"
        )
    means = [integrate(f) for f in family.functions]
    if _integral_is_zero(xi):
        branch = "zero"
    elif integrate(xi) > 0 and max(means) > 0:
        branch = "positive"
    elif integrate(xi) < 0 and min(means) < 0:
        branch = "negative"
    else:
        raise NoBranchError("no lower-bound branch applies to this xi")
    consts = _branch_constants(family, branch)
    if consts is None:
        raise NoBranchError(f"no pair supplies constants for the {branch} branch")
    a0, b, idx = consts
    q = evaluate(family, xi, OVER_REARRANGEMENTS)
    bound = a0 + b * float(integrate(abs(xi)))
    holds = float(q) >= bound - rel_tol * max(1.0, abs(bound))
    return L1Bound(a0, b, bound, q, branch, holds, rel_tol, idx)


def family_l1_norm_bound(family: SupportFamily):
    return max(integrate(abs(f)) for f in family.functions)


@dataclass(frozen=True)
class CrossCheck:
    pair_index: int
    part: str
    integral: float
    bound: float
    holds: bool


def family_l1_crosscheck(
    family: SupportFamily, xi: DiscreteFunction, rel_tol: float = 1e-9
) -> list[CrossCheck]:
    """Bound ``int f^+`` (or ``int f^-``) through the linear part of ``p``.

    ``xi`` must be nonnegative, nonzero, and supported on at most half of
    the (equal-mass) space.  Whichever of ``{f >= 0}``, ``{f <= 0}`` has at
    least half the mass gives ``int f^+ <= 2 mu(X) M(xi) / int xi`` or
    ``int f^- <= 2 mu(X) M(-xi) / int xi``, with ``M`` the linear part.
    """
    space = family.space
    if any(v < 0 for v in xi.values) or integrate(xi) == 0:
        raise ValueError("xi must be nonnegative and not identically zero")
    support = [i for i, v in enumerate(xi.values) if v > 0]
    if 2 * space.mass(support) > space.total:
        raise ValueError("xi must be supported on at most half the mass")
    total = float(space.total)
    int_xi = float(integrate(xi))
    out = []
    for k, f in enumerate(family.functions):
        nonneg = [i for i, v in enumerate(f.values) if v >= 0]
        if 2 * space.mass(nonneg) >= space.total:
            part = "positive"
            value = float(integrate(f.map(lambda v: max(v, 0))))
            bound = 2 * total * float(_linear_part(family, xi)) / int_xi
        else:
            part = "negative"
            value = float(integrate(f.map(lambda v: max(-v, 0))))
            bound = 2 * total * float(_linear_part(family, -xi)) / int_xi
        holds = value <= bound + rel_tol * max(1.0, abs(bound))
        out.append(CrossCheck(k, part, value, bound, holds))
    return out


def minkowski_functional(
    family: SupportFamily,
    c: float,
    xi: DiscreteFunction,
    mode: Optional[str] = None,
    rtol: float = 1e-10,
) -> float:
    """``inf {lam > 0 : p(xi / lam) < c}`` by bracketing and bisection."""
    zero = xi.with_values([0] * len(xi))
    if not c > evaluate(family, zero, mode):
        raise ValueError("c must exceed p(0)")
    if all(v == 0 for v in xi.values):
        return 0.0

    def inside(lam: float) -> bool:
        return evaluate(family, xi.map(lambda v: v / lam), mode) < c

    hi = 1.0
    while not inside(hi):
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("sublevel set never reached")
    lo = hi
    while inside(lo):
        lo *= 0.5
        if lo < 1e-12:
            return 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def ri_norm(family: SupportFamily, zeta: DiscreteFunction):
    """``max_f sup_{f' ~ f} int |f' zeta|``, ignoring the affine constants."""
    az = abs(zeta)
    return max(sup_pairing(abs(f), az).value for f in family.functions)


@dataclass
class AxiomResult:
    passed: int = 0
    failed: int = 0
    max_violation: float = 0.0

    def record(self, violation: float, tol: float) -> None:
        if violation > tol:
            self.failed += 1
        else:
            self.passed += 1
        self.max_violation = max(self.max_violation, violation)

    @property
    def holds(self) -> bool:
        return self.failed == 0


@dataclass
class AxiomReport:
    trials: int
    seed: int
    tolerance: float
    b_embedding: float
    b_lower: Optional[float]
    mean_abs_f: float
    checks: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.checks.values())


def _embedding_constant(family: SupportFamily) -> float:
    """``b`` with ``q(zeta) >= b int|zeta|``.

    ``q(zeta)`` is the rearrangement-closed functional of the family
    ``{|f|}`` evaluated at ``|zeta|``, so the positive branch of the lower
    bound applies; if every ``|f|`` is constant then ``q(zeta)`` equals the
    largest such constant times ``int|zeta|``.
    """
    abs_family = SupportFamily(tuple((0, abs(f)) for f in family.functions))
    if all(f.is_constant() for f in abs_family.functions):
        return float(max(f.values[0] for f in abs_family.functions))
    consts = _branch_constants(abs_family, "positive")
    if consts is None:
        raise NoBranchError("family is identically zero")
    return consts[1]


def _rel_violation(lhs, rhs) -> float:
    """How far ``lhs <= rhs`` fails, relative to the size of the numbers."""
    lhs, rhs = float(lhs), float(rhs)
    return max(0.0, lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def ri_norm_axiom_report(
    family: SupportFamily,
    trials: int = 1000,
    seed: int = 0,
    rel_tol: float = 1e-9,
    fatou_steps: int = 8,
) -> AxiomReport:
    """Check the Banach function norm axioms of :func:`ri_norm` on random data.

    Trial ``k`` draws from the counter stream ``(seed, k)``.
    """
    if all(f.is_constant() for f in family.functions):
        raise ConstantFamilyError("the family needs a nonconstant function")
    space = family.space
    n = space.n_cells
    b_embed = _embedding_constant(family)
    try:
        b_lower = _branch_constants(family, "zero")[1]
    except TypeError:
        b_lower = None
    mean_abs = max(float(average(abs(f))) for f in family.functions)
    report = AxiomReport(trials, seed, rel_tol, b_embed, b_lower, mean_abs)
    names = [
        "homogeneity",
        "triangle",
        "monotonicity",
        "faithfulness",
        "fatou",
        "embedding",
        "rearrangement_invariance",
        "lower_equivalence",
        "constant_assembly",
        "upper_equivalence",
    ]
    checks = {name: AxiomResult() for name in names}

    def P(xi):
        return max(_linear_part(family, xi, OVER_REARRANGEMENTS),
                   _linear_part(family, -xi, OVER_REARRANGEMENTS))

    for k in range(trials):
        rng = CounterRNG(seed, k)
        zeta = DiscreteFunction(space, tuple(float(v) for v in rng.normals(n)))
        eta = DiscreteFunction(space, tuple(float(v) for v in rng.normals(n)))
        q = ri_norm(family, zeta)

        t = 0.1 + 9.9 * rng.uniform()
        checks["homogeneity"].record(
            max(
                abs(float(ri_norm(family, zeta * 2)) - 2 * float(q)),
                abs(float(ri_norm(family, zeta * t)) - t * float(q)),
            )
            / max(1.0, t * float(q)),
            rel_tol,
        )
        checks["triangle"].record(
            _rel_violation(ri_norm(family, zeta + eta), q + ri_norm(family, eta)), rel_tol
        )
        shrink = zeta.with_values(v * u for v, u in zip(zeta.values, rng.uniforms(n)))
        checks["monotonicity"].record(_rel_violation(ri_norm(family, shrink), q), rel_tol)

        cell = rng.integers(0, n - 1)
        spike = zeta.with_values(
            (1.0 + rng.uniform()) if i == cell else 0.0 for i in range(n)
        )
        zero_ok = ri_norm(family, zeta * 0) == 0
        checks["faithfulness"].record(
            0.0 if (ri_norm(family, spike) > 0 and zero_ok) else 1.0, rel_tol
        )

        az = abs(zeta)
        chain = [ri_norm(family, az * (j / fatou_steps)) for j in range(fatou_steps + 1)]
        worst = max(_rel_violation(a, b) for a, b in zip(chain, chain[1:]))
        worst = max(worst, abs(float(chain[-1]) - float(q)) / max(1.0, float(q)))
        checks["fatou"].record(worst, rel_tol)

        checks["embedding"].record(
            _rel_violation(b_embed * float(integrate(az)), q), rel_tol
        )
        shuffled = az.permuted(rng.permutation(n))
        checks["rearrangement_invariance"].record(
            abs(float(ri_norm(family, shuffled)) - float(q)) / max(1.0, float(q)), rel_tol
        )

        p_val = P(zeta)
        checks["lower_equivalence"].record(_rel_violation(p_val, q), rel_tol)
        checks["constant_assembly"].record(
            _rel_violation(q, 4 * float(p_val) + 3 * mean_abs * float(integrate(az))),
            rel_tol,
        )
        if b_lower:
            mean = float(average(zeta))
            centered = zeta.map(lambda v: v - mean)
            constant = 4 + 3 * mean_abs / b_lower
            checks["upper_equivalence"].record(
                _rel_violation(ri_norm(family, centered), constant * float(P(centered))),
                rel_tol,
            )
    report.checks = checks
    return report


@dataclass(frozen=True)
class LipschitzReport:
    max_ratio: float
    bound: float
    M: float
    operator_bound: float
    pairs_used: int
    holds: bool


def _sup_on_cube(family: SupportFamily, radius: float, mode: str) -> float:
    """``max |p|`` over the sup-norm ball of ``radius`` (upper estimate)."""
    space = family.space
    n = space.n_cells
    if mode == OVER_REARRANGEMENTS:
        # p is convex and symmetric under permutations: its maximum over the
        # cube sits at a vertex, and only the number of +radius entries matters
        vertices = [
            DiscreteFunction(space, (radius,) * k + (-radius,) * (n - k))
            for k in range(n + 1)
        ]
    else:
        if n > 16:
            raise ValueError("vertex enumeration limited to 16 cells in fixed mode")
        vertices = [
            DiscreteFunction(
                space, tuple(radius if (mask >> i) & 1 else -radius for i in range(n))
            )
            for mask in range(1 << n)
        ]
    top = max(float(evaluate(family, v, mode)) for v in vertices)
    floor = max(float(a) - radius * float(integrate(abs(f))) for a, f in family.pairs)
    return max(top, -floor, 0.0)


def lipschitz_report(
    family: SupportFamily,
    R: float,
    trials: int = 200,
    seed: int = 0,
    mode: Optional[str] = None,
    rel_tol: float = 1e-9,
) -> LipschitzReport:
    """Largest observed difference quotient of ``p`` on the ball of radius ``R``.

    The reference bound is ``2 M`` with ``M`` the largest ``|p|`` on the ball
    of radius ``R + 1``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    mode = mode or family.default_mode()
    space = family.space
    n = space.n_cells
    M = _sup_on_cube(family, R + 1.0, mode)
    worst = 0.0
    used = 0
    for k in range(trials):
        rng = CounterRNG(seed, k)
        xi = DiscreteFunction(space, tuple(float(v) for v in (2 * rng.uniforms(n) - 1) * R))
        eta = DiscreteFunction(space, tuple(float(v) for v in (2 * rng.uniforms(n) - 1) * R))
        dist = max(abs(a - b) for a, b in zip(xi.values, eta.values))
        if dist == 0:
            continue
        used += 1
        diff = abs(float(evaluate(family, xi, mode)) - float(evaluate(family, eta, mode)))
        worst = max(worst, diff / dist)
    op = float(family_l1_norm_bound(family))
    bound = 2 * M
    holds = worst <= bound + rel_tol * max(1.0, bound)
    return LipschitzReport(worst, bound, M, op, used, holds)
