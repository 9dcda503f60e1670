"""Registry of verification checks and the machinery to run and report them.

A check draws its random data from ``CounterRNG(seed, crc32(check_id))`` and
returns a flat ``name -> number`` map.  Whether it holds is decided from
that map and the tolerance alone, so a report can be re-judged later with a
different tolerance.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .flow import (
    FlowSpec,
    LeapfrogMap,
    LinearMap,
    RegularizerSpec,
    flow,
    pullback,
    regularize,
    volume_check,
)
from .functional import (
    OVER_REARRANGEMENTS,
    SupportFamily,
    alpha_curves,
    evaluate,
    l1_lower_bound,
    lipschitz_report,
    minkowski_functional,
    ri_norm_axiom_report,
)
from .grid import DarbouxBox, GridField
from .hessian import counterexample_map, image_box, localized_saddle, p_functional_report
from .measure import DiscreteFunction, MeasureSpace, integrate
from .oracles import (
    brute_q,
    brute_sup,
    lp_alpha_constants,
    lp_top_average,
    min_matching_error,
    orbit_average,
)
from .quadratic import (
    QuadraticForm,
    compose_linear,
    det_invariant,
    diagonal_type,
    poisson_bracket,
    random_symplectic,
    symplectic_matrix,
    t_closed_form,
    t_invariant,
)
from .rearrange import (
    abs_sup_bound_check,
    chebyshev_lower,
    conv1_average_on,
    katok_transport,
    pairing_lower_bound,
    product_abs_bound_check,
    similarly_ordered,
    sup_pairing,
)
from .rng import DEFAULT_SEED, CounterRNG

__all__ = [
    "Check",
    "CheckReport",
    "RunConfig",
    "UnknownCheckError",
    "CHECKS",
    "check_ids",
    "run_check",
    "run_suite",
    "load_config",
    "resolve_seed",
    "reports_to_json",
    "reports_to_csv",
    "REPORT_FIELDS",
]

SEED_ENV = "RL_SEED"
REPORT_FIELDS = ("check_id", "paper_ref", "inputs_digest", "values", "holds", "tolerance", "runtime_ms")


class UnknownCheckError(KeyError):
    def __str__(self):
        return f"unknown check id: {self.args[0]}"


@dataclass(frozen=True)
class Check:
    check_id: str
    label: str
    tolerance: float
    run: Callable[[int], dict]
    decide: Callable[[dict, float], bool]


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    paper_ref: str
    inputs_digest: str
    values: dict
    holds: bool
    tolerance: float
    runtime_ms: float = 0.0

    def as_dict(self, timings: bool = False) -> dict:
        out = {
            "check_id": self.check_id,
            "paper_ref": self.paper_ref,
            "inputs_digest": self.inputs_digest,
            "values": self.values,
            "holds": self.holds,
            "tolerance": self.tolerance,
        }
        if timings:
            out["runtime_ms"] = self.runtime_ms
        return out


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    tolerances: dict = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"
    paper_refs: dict = field(default_factory=dict)
    timings: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.format!r}")
        self.seed = int(self.seed)


def load_config(path) -> RunConfig:
    """Read a JSON config file with keys ``seed``, ``tolerances``, ``paper_refs``,
    ``output``, ``format``, ``timings`` and ``jobs`` (all optional)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a JSON object")
    known = {"seed", "tolerances", "paper_refs", "output", "format", "timings", "jobs"}
    extra = set(raw) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    return RunConfig(**raw)


def resolve_seed(cli_seed: Optional[int], config: RunConfig, environ=None) -> int:
    """``--seed`` beats ``RL_SEED``, which beats the config file and the default."""
    if cli_seed is not None:
        return int(cli_seed)
    environ = os.environ if environ is None else environ
    if environ.get(SEED_ENV, "").strip():
        return int(environ[SEED_ENV], 0)
    return config.seed


def _rng(seed: int, check_id: str) -> CounterRNG:
    return CounterRNG(seed, zlib.crc32(check_id.encode()))


def _rel(a, b) -> float:
    return abs(float(a) - float(b)) / max(1.0, abs(float(b)))


def _fn(space: MeasureSpace, values) -> DiscreteFunction:
    return DiscreteFunction(space, tuple(values))


def _ints(rng: CounterRNG, lo: int, hi: int, n: int) -> list:
    return rng.integers(lo, hi, n)


def _halves_family(n: int = 6) -> SupportFamily:
    space = MeasureSpace.uniform(n)
    f = _fn(space, [1] * (n // 2) + [-1] * (n // 2))
    return SupportFamily(((0, f),))


# --- quadratic forms --------------------------------------------------------


def _check_t_closed_form(seed: int) -> dict:
    rng = _rng(seed, "t_closed_form")
    worst = 0.0
    trials = 0
    for n in (1, 2):
        for _ in range(1000):
            q = [float(v) for v in rng.normals(n)]
            exact = t_closed_form(q)
            worst = max(worst, abs(t_invariant(diagonal_type(q)) - exact) / exact)
            trials += 1
    return {
        "trials": trials,
        "max_rel_error": worst,
        "t_xy": t_invariant(diagonal_type([1.0])),
        "t_two_sum_n2": t_invariant(diagonal_type([2.0, 2.0])),
    }


def _decide_t_closed_form(v, tol):
    return v["max_rel_error"] <= tol and _rel(v["t_xy"], 8) <= tol and _rel(v["t_two_sum_n2"], 96) <= tol


def _random_form(rng: CounterRNG, n: int, scale: float = 1.0) -> QuadraticForm:
    m = rng.normals(4 * n * n).reshape(2 * n, 2 * n) * scale
    return QuadraticForm(0.5 * (m + m.T))


def _check_t_symplectic(seed: int) -> dict:
    rng = _rng(seed, "t_symplectic_invariance")
    worst = 0.0
    defect = 0.0
    for n in (1, 2):
        J = symplectic_matrix(n)
        for _ in range(100):
            Q = _random_form(rng, n)
            S = random_symplectic(n, rng)
            defect = max(defect, float(np.max(np.abs(S.T @ J @ S - J))) / max(1.0, float(np.max(np.abs(S))) ** 2))
            worst = max(worst, _rel(t_invariant(compose_linear(Q, S)), t_invariant(Q)))
    Q = diagonal_type([2.0, 2.0])
    D = counterexample_map([1.0, -1.0]).matrix
    moved = compose_linear(Q, D)
    return {
        "max_rel_deviation": worst,
        "max_symplectic_defect": defect,
        "witness_t_ratio": t_invariant(moved) / t_invariant(Q),
        "witness_t_ratio_expected": (math.exp(4) + math.exp(-4)) / 2,
        "witness_det_ratio": det_invariant(moved) / det_invariant(Q),
    }


def _decide_t_symplectic(v, tol):
    return (
        v["max_rel_deviation"] <= tol
        and _rel(v["witness_t_ratio"], v["witness_t_ratio_expected"]) <= 1e-9
        and abs(v["witness_det_ratio"] - 1.0) <= 1e-12
    )


def _check_det_sl(seed: int) -> dict:
    rng = _rng(seed, "det_sl_invariance")
    general = 0.0
    special = 0.0
    for n in (1, 2):
        for _ in range(100):
            Q = _random_form(rng, n)
            S = rng.normals(4 * n * n).reshape(2 * n, 2 * n)
            d = float(np.linalg.det(S))
            general = max(general, _rel(det_invariant(compose_linear(Q, S)), d * d * det_invariant(Q)))
            S = S / abs(d) ** (1.0 / (2 * n))
            special = max(special, _rel(det_invariant(compose_linear(Q, S)), det_invariant(Q)))
    return {"max_rel_error_general": general, "max_rel_error_unimodular": special}


def _decide_det_sl(v, tol):
    return v["max_rel_error_general"] <= tol and v["max_rel_error_unimodular"] <= tol


def _check_jacobi(seed: int) -> dict:
    rng = _rng(seed, "poisson_jacobi")
    worst = 0.0
    anti = 0.0
    for k in range(100):
        n = 1 + k % 2
        A, B, C = (_random_form(rng, n) for _ in range(3))
        total = (
            poisson_bracket(A, poisson_bracket(B, C))
            + poisson_bracket(B, poisson_bracket(C, A))
            + poisson_bracket(C, poisson_bracket(A, B))
        )
        worst = max(worst, float(np.max(np.abs(total.a))))
        anti = max(anti, float(np.max(np.abs((poisson_bracket(A, B) + poisson_bracket(B, A)).a))))
    xy = diagonal_type([1.0])
    xx = QuadraticForm([[1.0, 0.0], [0.0, 0.0]])
    return {
        "max_jacobi_residual": worst,
        "max_antisymmetry_residual": anti,
        "bracket_xy_xx_coeff": float(poisson_bracket(xy, xx).a[0, 0]),
    }


def _decide_jacobi(v, tol):
    return (
        v["max_jacobi_residual"] <= tol
        and v["max_antisymmetry_residual"] <= tol
        and abs(v["bracket_xy_xx_coeff"] - 2.0) <= tol
    )


def _check_mechanism(seed: int) -> dict:
    rng = _rng(seed, "p_functional_mechanism")
    box = DarbouxBox(2, (-1.6, 1.6), 33)
    xi = GridField.from_function(box, lambda z: localized_saddle(z, r0=0.5, r1=1.5))
    before = p_functional_report(xi)
    c = [1.0, -1.0]
    g = counterexample_map(c)
    eta = pullback(g, xi, target=image_box(box, g))
    after = p_functional_report(eta)
    n = 2
    # t(Q o D_c) - t(Q) for Q = 2 sum x_k y_k, the only point that survives
    expected = 4 * (4 * n + 4) * (sum(math.exp(4 * v) for v in c) - n)
    z = rng.normals(8).reshape(2, 2, 2)
    u, _ = np.linalg.qr(z[0] + 1j * z[1])
    S = np.block([[u.real, -u.imag], [u.imag, u.real]])
    zeta = pullback(LinearMap(S), xi)
    moved = p_functional_report(zeta)
    diff = after.value - before.value
    return {
        "p_xi": before.value,
        "p_pullback": after.value,
        "difference": diff,
        "expected_difference": expected,
        "rel_error": abs(diff - expected) / expected,
        "p_symplectic_pullback": moved.value,
        "symplectic_rel_deviation": abs(moved.value - before.value) / abs(before.value),
        "symplectic_abs_deviation": abs(moved.value - before.value),
        "t_error_budget": before.t_error + moved.t_error,
        "pullback_interpolation_error": zeta.error,
        "points_xi": len(before.points),
        "points_pullback": len(after.points),
    }


def _decide_mechanism(v, tol):
    return (
        v["p_xi"] != v["p_pullback"]
        and v["rel_error"] <= tol
        and v["symplectic_rel_deviation"] <= tol
    )


# --- rearrangements -----------------------------------------------------------


def _check_hardy_littlewood(seed: int) -> dict:
    rng = _rng(seed, "hardy_littlewood_oracle")
    mismatches = asym = witness_bad = total = 0
    for n in (5, 6, 7):
        space = MeasureSpace.uniform(n)
        for _ in range(100):
            phi = _fn(space, _ints(rng, -5, 5, n))
            psi = _fn(space, _ints(rng, -5, 5, n))
            pairing = sup_pairing(phi, psi)
            mismatches += pairing.value != brute_sup(phi, psi)[0]
            asym += pairing.value != sup_pairing(psi, phi).value
            rearranged = pairing.rearranged(phi)
            witness_bad += not similarly_ordered(rearranged, psi) or integrate(rearranged * psi) != pairing.value
            total += 1
    return {
        "instances": total,
        "oracle_mismatches": mismatches,
        "symmetry_failures": asym,
        "witness_failures": witness_bad,
    }


def _decide_all_zero(*names):
    def decide(v, tol):
        return all(v[k] == 0 for k in names)

    return decide


def _random_size(rng: CounterRNG, lo: int = 2, hi: int = 12) -> int:
    return rng.integers(lo, hi)


def _check_chebyshev(seed: int) -> dict:
    rng = _rng(seed, "chebyshev")
    worst = 0.0
    for _ in range(1000):
        n = _random_size(rng)
        space = MeasureSpace.uniform(n)
        a = np.sort(rng.normals(n))
        b = np.sort(rng.normals(n))
        perm = rng.permutation(n)
        phi = _fn(space, (float(a[p]) for p in perm))
        psi = _fn(space, (float(b[p]) for p in perm))
        lhs, rhs = chebyshev_lower(phi, psi)
        worst = max(worst, max(0.0, float(rhs) - float(lhs)) / max(1.0, abs(float(lhs)), abs(float(rhs))))
    return {"instances": 1000, "max_rel_violation": worst}


def _decide_violation(v, tol):
    return v["max_rel_violation"] <= tol


def _inequality_suite(check_id: str, fn) -> Callable[[int], dict]:
    def run(seed: int) -> dict:
        rng = _rng(seed, check_id)
        worst = 0.0
        slack = math.inf
        for _ in range(1000):
            n = _random_size(rng)
            space = MeasureSpace.uniform(n)
            a = _fn(space, (float(v) for v in rng.normals(n)))
            b = _fn(space, (float(v) for v in rng.normals(n)))
            rep = fn(a, b)
            scale = max(1.0, abs(float(rep.lhs)), abs(float(rep.rhs)))
            worst = max(worst, max(0.0, float(rep.lhs) - float(rep.rhs)) / scale)
            slack = min(slack, (float(rep.rhs) - float(rep.lhs)) / scale)
        return {"instances": 1000, "max_rel_violation": worst, "min_rel_slack": slack}

    return run


def _random_subset(rng: CounterRNG, n: int, k: int) -> list:
    return sorted(rng.permutation(n)[:k])


def _check_pairing_lower_bound(seed: int) -> dict:
    rng = _rng(seed, "pairing_lower_bound")
    violations = sup_mismatch = total = 0
    for n in range(2, 8):
        space = MeasureSpace.uniform(n)
        for _ in range(100):
            k = rng.integers(0, n)
            S = _random_subset(rng, n, k)
            T = _random_subset(rng, n, k)
            f = _fn(space, _ints(rng, -5, 5, n))
            xi = _fn(space, (rng.integers(0, 5) if i in T else -rng.integers(0, 5) for i in range(n)))
            bound, sup = pairing_lower_bound(f, xi, S, T)
            brute = brute_sup(f, xi)[0]
            violations += bound > brute
            sup_mismatch += sup != brute
            total += 1
    return {"instances": total, "violations": violations, "sup_mismatches": sup_mismatch}


def _check_conv1(seed: int) -> dict:
    rng = _rng(seed, "conv1_membership")
    bad = 0
    for _ in range(100):
        n = rng.integers(1, 6)
        space = MeasureSpace.uniform(n)
        f = _fn(space, _ints(rng, -9, 9, n))
        E = _random_subset(rng, n, rng.integers(0, n))
        bad += conv1_average_on(f, E) != orbit_average(f, E)
    return {"instances": 100, "mismatches": bad}


def _check_katok(seed: int) -> dict:
    rng = _rng(seed, "katok_transport")
    worst = 0.0
    separated = separated_nonzero = invalid = oracle_nonzero = 0
    for k in range(1000):
        n = rng.integers(2, 64)
        space = MeasureSpace.uniform(n)
        lattice = rng.integers(1, 16)
        xi = _fn(space, (round(float(v) * lattice) / lattice for v in rng.normals(n)))
        eta = xi.permuted(rng.permutation(n))
        eps = 0.01 + rng.uniform() * 2.0
        plan = katok_transport(xi, eta, eps, within="index" if k % 2 else "sorted")
        try:
            plan.validate(space)
        except AssertionError:
            invalid += 1
        worst = max(worst, float(plan.error) / plan.bound)
        lo = min(xi.values)
        buckets: dict = {}
        for v in xi.values:
            buckets.setdefault(math.floor((v - lo) / plan.interval_length), set()).add(v)
        if all(len(vals) == 1 for vals in buckets.values()):
            separated += 1
            separated_nonzero += plan.error != 0
        if k < 100:
            oracle_nonzero += min_matching_error(xi, eta) != 0
    return {
        "instances": 1000,
        "max_error_over_bound": worst,
        "separated_instances": separated,
        "separated_nonzero_error": separated_nonzero,
        "invalid_plans": invalid,
        "oracle_nonzero_matchings": oracle_nonzero,
    }


def _decide_katok(v, tol):
    return (
        v["max_error_over_bound"] < 1.0
        and v["separated_nonzero_error"] == 0
        and v["invalid_plans"] == 0
        and v["oracle_nonzero_matchings"] == 0
    )


# --- convex functionals -------------------------------------------------------


def _check_alpha_constants(seed: int) -> dict:
    rng = _rng(seed, "alpha_constants")
    f = _halves_family().pairs[0][1]
    ac = alpha_curves(f)
    oc, om = lp_alpha_constants(f)
    curve_err = 0.0
    c_excess = m_deficit = 0.0
    for _ in range(10):
        n = rng.integers(2, 8)
        space = MeasureSpace(tuple(rng.integers(1, 4, n)))
        g = _fn(space, (float(v) for v in rng.normals(n)))
        curves = alpha_curves(g)
        for alpha, s, i in zip(curves.alphas, curves.s, curves.i):
            curve_err = max(
                curve_err,
                _rel(s, lp_top_average(g, float(alpha))),
                _rel(i, lp_top_average(g, float(alpha), bottom=True)),
            )
        gc, gm = lp_alpha_constants(g, grid=101)
        c_excess = max(c_excess, float(curves.c) - gc)
        m_deficit = max(m_deficit, gm - float(curves.m))
    return {
        "halves_c": float(ac.c),
        "halves_m": float(ac.m),
        "halves_oracle_c": oc,
        "halves_oracle_m": om,
        "max_curve_error": curve_err,
        "max_c_above_oracle": c_excess,
        "max_m_below_oracle": m_deficit,
    }


def _decide_alpha(v, tol):
    return (
        abs(v["halves_c"] - 0.5) <= tol
        and abs(v["halves_m"] - 1.0) <= tol
        and abs(v["halves_oracle_c"] - 0.5) <= tol
        and abs(v["halves_oracle_m"] - 1.0) <= tol
        and v["max_curve_error"] <= tol
        and v["max_c_above_oracle"] <= tol
        and v["max_m_below_oracle"] <= tol
    )


def _check_l1_bound(seed: int) -> dict:
    rng = _rng(seed, "l1_lower_bound")
    n = 6
    space = MeasureSpace.uniform(n)
    f = _fn(space, [1, 1, 1, -1, -1, -1])
    g = _fn(space, [2, 1, 1, 0, 0, 0])
    families = {
        "zero": SupportFamily(((0, f),)),
        "positive": SupportFamily(((0, f), (0, g))),
        "negative": SupportFamily(((0, f), (0, -g))),
    }
    out: dict = {}
    for branch, family in families.items():
        worst = 0.0
        eval_gap = 0.0
        b = math.nan
        for _ in range(1000):
            raw = rng.normals(n)
            raw = raw - raw.mean()
            if branch == "zero":
                xi = _fn(space, (float(v) for v in raw))
                total = float(integrate(xi))
                xi = _fn(space, (float(v) - total / n for v in xi.values))
            else:
                shift = (0.05 + rng.uniform()) * (1 if branch == "positive" else -1)
                xi = _fn(space, (float(v + shift) for v in raw))
            rep = l1_lower_bound(family, xi)
            if rep.branch != branch:
                raise AssertionError(f"expected the {branch} branch, got {rep.branch}")
            q = float(brute_q(family, xi))
            b = rep.b
            worst = max(worst, max(0.0, rep.bound - q) / max(1.0, abs(rep.bound)))
            eval_gap = max(eval_gap, _rel(rep.q_value, q))
        out[f"{branch}_b"] = b
        out[f"{branch}_max_rel_violation"] = worst
        out[f"{branch}_max_eval_gap"] = eval_gap
    return out


def _decide_l1(v, tol):
    return all(
        v[f"{b}_max_rel_violation"] <= tol and v[f"{b}_max_eval_gap"] <= tol and v[f"{b}_b"] > 0
        for b in ("zero", "positive", "negative")
    )


def _check_axioms(seed: int) -> dict:
    family = _halves_family()
    rep = ri_norm_axiom_report(family, trials=1000, seed=zlib.crc32(b"ri_norm_axioms") ^ seed)
    out: dict = {"trials": rep.trials, "b_embedding": rep.b_embedding, "b_lower": rep.b_lower or 0.0}
    for name, res in rep.checks.items():
        out[f"{name}_max_violation"] = res.max_violation
    return out


def _decide_axioms(v, tol):
    return all(val <= tol for k, val in v.items() if k.endswith("_max_violation")) and v["b_embedding"] > 0


def _check_lipschitz(seed: int) -> dict:
    family = _halves_family()
    salt = zlib.crc32(b"lipschitz") ^ seed
    rep = lipschitz_report(family, 1.0, trials=200, seed=salt)
    space = family.space
    linear = SupportFamily(((0, _fn(space, [2, -1, 0.5, 0, 1, -3])),), rearrangement_closed=False)
    lin = lipschitz_report(linear, 1.0, trials=200, seed=salt)
    return {
        "max_ratio": rep.max_ratio,
        "bound": rep.bound,
        "linear_max_ratio": lin.max_ratio,
        "linear_operator_bound": lin.operator_bound,
    }


def _decide_lipschitz(v, tol):
    return (
        v["max_ratio"] <= v["bound"] * (1 + tol)
        and v["linear_max_ratio"] <= v["linear_operator_bound"] * (1 + tol)
    )


def _check_minkowski(seed: int) -> dict:
    rng = _rng(seed, "minkowski")
    n = 4
    space = MeasureSpace.uniform(n)
    signs = [
        _fn(space, (1 if (mask >> i) & 1 else -1 for i in range(n))) for mask in range(1 << n)
    ]
    shifted = SupportFamily(tuple((1, s) for s in signs), rearrangement_closed=False)
    example = minkowski_functional(shifted, 2, _fn(space, [1.5, -0.5, 0.25, -0.75]))
    family = SupportFamily(((1, _fn(space, [1, 1, -1, -1])), (0, _fn(space, [2, 0, 0, -1]))))
    homog = 0.0
    inside_bad = 0
    for _ in range(200):
        xi = _fn(space, (float(v) for v in rng.normals(n)))
        q = minkowski_functional(family, 2, xi)
        t = 0.1 + 5 * rng.uniform()
        homog = max(homog, _rel(minkowski_functional(family, 2, xi * t), t * q))
        if float(evaluate(family, xi, OVER_REARRANGEMENTS)) < 2 and not q <= 1 + 1e-10:
            inside_bad += 1
    return {
        "shifted_l1_example": example,
        "max_homogeneity_error": homog,
        "sublevel_violations": inside_bad,
    }


def _decide_minkowski(v, tol):
    return (
        _rel(v["shifted_l1_example"], 3.0) <= tol
        and v["max_homogeneity_error"] <= tol
        and v["sublevel_violations"] == 0
    )


# --- flows ------------------------------------------------------------------------


def _check_exact_linear(seed: int) -> dict:
    rng = _rng(seed, "flow_exact_linear")
    defect = 0.0
    vol = 0.0
    for n in (1, 2):
        J = symplectic_matrix(n)
        for _ in range(50):
            H = _random_form(rng, n, scale=0.5)
            g = flow(FlowSpec(H, duration=1.0))
            S = g.matrix
            defect = max(defect, float(np.max(np.abs(S.T @ J @ S - J))))
            vol = max(vol, volume_check(g, samples=8, seed=seed).max_jacobian_deviation)
    rot = flow(FlowSpec(QuadraticForm(0.5 * np.eye(2)), duration=math.pi / 2)).matrix
    hyp = flow(FlowSpec(diagonal_type([1.0]), duration=0.7)).matrix
    return {
        "max_symplectic_defect": defect,
        "max_volume_deviation": vol,
        "rotation_error": float(np.max(np.abs(rot - np.array([[0.0, 1.0], [-1.0, 0.0]])))),
        "hyperbolic_error": float(np.max(np.abs(hyp - np.diag([math.exp(0.7), math.exp(-0.7)])))),
    }


def _decide_exact_linear(v, tol):
    return all(v[k] <= tol for k in v)


def _bounded_hamiltonian(z):
    r2 = np.sum(z * z, axis=-1)
    return np.exp(-0.5 * r2) * (1.0 + 0.3 * z[..., 0] - 0.2 * z[..., 1] * z[..., 0])


def _check_leapfrog(seed: int) -> dict:
    box = DarbouxBox(1, (-4.0, 4.0), 81)
    H = GridField.from_function(box, _bounded_hamiltonian)
    g = LeapfrogMap(H, dt=0.01, steps=100)
    rep = volume_check(g, samples=64, box=box, seed=seed)
    pts = CounterRNG(seed, zlib.crc32(b"flow_leapfrog_volume")).uniforms(40).reshape(20, 2) * 2 - 1
    back = g.inverse()(g(pts))
    energy = H.spline.values(g(pts)) - H.spline.values(pts)
    return {
        "steps": g.steps,
        "max_volume_deviation": rep.max_jacobian_deviation,
        "round_trip_error": float(np.max(np.abs(back - pts))),
        "max_energy_drift": float(np.max(np.abs(energy))),
    }


def _decide_leapfrog(v, tol):
    return v["steps"] >= 100 and v["max_volume_deviation"] <= tol and v["round_trip_error"] <= tol


def _check_pullback_rotation(seed: int) -> dict:
    rng = _rng(seed, "pullback_rotation")
    box = DarbouxBox(1, (-4.0, 4.0), 81)
    xi = GridField.from_function(box, lambda z: np.exp(-2.0 * np.sum(z * z, axis=-1)))
    gen = QuadraticForm(0.5 * np.eye(2))
    worst = 0.0
    actual = 0.0
    reported = 0.0
    for _ in range(4):
        g = flow(FlowSpec(gen, duration=2 * math.pi * rng.uniform()))
        eta = pullback(g, xi)
        err = float(np.max(np.abs(eta.samples - xi.samples)))
        worst = max(worst, err - eta.error)
        actual = max(actual, err)
        reported = max(reported, eta.error)
    g = flow(FlowSpec(gen, duration=0.4))
    h = flow(FlowSpec(gen, duration=0.9))
    step = pullback(h, pullback(g, xi))
    direct = pullback(g.then(h), xi)
    comp_gap = float(np.max(np.abs(step.samples - direct.samples)))
    return {
        "max_excess_over_reported": worst,
        "max_pullback_error": actual,
        "max_reported_error": reported,
        "composition_gap": comp_gap,
        "composition_budget": 2.0 * max(step.error, direct.error),
    }


def _decide_pullback(v, tol):
    return v["max_excess_over_reported"] <= tol and v["composition_gap"] <= v["composition_budget"] + tol


def _check_regularizer(seed: int) -> dict:
    box = DarbouxBox(1, (-2.0, 2.0), 81)

    def bump(z):
        r2 = np.sum(z * z, axis=-1)
        inside = r2 < 1.0
        out = np.zeros_like(r2)
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    h = GridField.from_function(box, bump)
    mass = h.integral()
    out = {"mass": mass}
    for lam in (8, 16):
        r = regularize(RegularizerSpec(float(lam)), h)
        out[f"mass_error_{lam}"] = abs(r.integral() - mass)
        out[f"sup_distance_{lam}"] = float(np.max(np.abs(r.samples - h.samples)))
    zero = regularize(RegularizerSpec(8.0), GridField(box, np.zeros(box.grid)))
    out["zero_field_max"] = zero.max_abs()
    return out


def _decide_regularizer(v, tol):
    return (
        v["mass_error_8"] <= tol
        and v["mass_error_16"] <= tol
        and v["sup_distance_16"] < v["sup_distance_8"]
        and v["zero_field_max"] == 0
    )


CHECKS: dict[str, Check] = {
    c.check_id: c
    for c in [
        Check("t_closed_form", "trace of ad squared on diagonal forms", 1e-9,
              _check_t_closed_form, _decide_t_closed_form),
        Check("t_symplectic_invariance", "symplectic invariance of the trace invariant", 1e-6,
              _check_t_symplectic, _decide_t_symplectic),
        Check("det_sl_invariance", "determinant under linear substitution", 1e-9,
              _check_det_sl, _decide_det_sl),
        Check("poisson_jacobi", "Poisson bracket of quadratic forms", 1e-10,
              _check_jacobi, _decide_jacobi),
        Check("p_functional_mechanism", "critical-point functional under volume-preserving maps", 0.05,
              _check_mechanism, _decide_mechanism),
        Check("hardy_littlewood_oracle", "sorted pairing attains the rearrangement supremum", 0.0,
              _check_hardy_littlewood,
              _decide_all_zero("oracle_mismatches", "symmetry_failures", "witness_failures")),
        Check("chebyshev", "integral inequality for similarly ordered pairs", 1e-9,
              _check_chebyshev, _decide_violation),
        Check("abs_sup_bound", "supremum of the absolute pairing", 1e-9,
              _inequality_suite("abs_sup_bound", abs_sup_bound_check), _decide_violation),
        Check("product_abs_bound", "absolute product bound over rearrangements", 1e-9,
              _inequality_suite("product_abs_bound", product_abs_bound_check), _decide_violation),
        Check("pairing_lower_bound", "two-block lower bound for the pairing supremum", 0.0,
              _check_pairing_lower_bound, _decide_all_zero("violations", "sup_mismatches")),
        Check("conv1_membership", "block averages as averages over rearrangements", 0.0,
              _check_conv1, _decide_all_zero("mismatches")),
        Check("katok_transport", "level-set matching transport", 0.0,
              _check_katok, _decide_katok),
        Check("alpha_constants", "top and bottom average curves", 1e-9,
              _check_alpha_constants, _decide_alpha),
        Check("l1_lower_bound", "L1 lower bound for rearrangement-closed functionals", 1e-9,
              _check_l1_bound, _decide_l1),
        Check("ri_norm_axioms", "rearrangement-invariant norm axioms", 1e-9,
              _check_axioms, _decide_axioms),
        Check("lipschitz", "Lipschitz bound on sup-norm balls", 1e-9,
              _check_lipschitz, _decide_lipschitz),
        Check("minkowski", "Minkowski functional of a sublevel set", 1e-9,
              _check_minkowski, _decide_minkowski),
        Check("flow_exact_linear", "exact flows of quadratic Hamiltonians", 1e-12,
              _check_exact_linear, _decide_exact_linear),
        Check("flow_leapfrog_volume", "volume preservation of the leapfrog flow", 1e-6,
              _check_leapfrog, _decide_leapfrog),
        Check("pullback_rotation", "pullback of a radial field by rotations", 1e-12,
              _check_pullback_rotation, _decide_pullback),
        Check("regularizer", "mollification by coordinate flows", 1e-8,
              _check_regularizer, _decide_regularizer),
    ]
}


def check_ids() -> list[str]:
    return sorted(CHECKS)


def _clean(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("check produced a non-finite value")
    return value


def inputs_digest(check_id: str, seed: int, tolerance: float) -> str:
    payload = json.dumps(
        {"check_id": check_id, "seed": seed, "tolerance": tolerance, "version": __version__},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def run_check(check_id: str, config: RunConfig) -> CheckReport:
    try:
        check = CHECKS[check_id]
    except KeyError:
        raise UnknownCheckError(check_id) from None
    tol = float(config.tolerances.get(check_id, check.tolerance))
    start = time.perf_counter()
    values = {k: _clean(v) for k, v in check.run(config.seed).items()}
    elapsed = (time.perf_counter() - start) * 1000.0
    return CheckReport(
        check_id=check_id,
        paper_ref=str(config.paper_refs.get(check_id, check.label)),
        inputs_digest=inputs_digest(check_id, config.seed, tol),
        values=values,
        holds=bool(check.decide(values, tol)),
        tolerance=tol,
        runtime_ms=elapsed,
    )


def _run_one(args):
    return run_check(*args)


def run_suite(names, config: RunConfig) -> list[CheckReport]:
    """Run the named checks (``None`` for all); reports come back sorted by id."""
    names = check_ids() if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise UnknownCheckError(unknown[0])
    names = sorted(set(names))
    if config.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(_run_one, [(n, config) for n in names]))
    else:
        reports = [run_check(n, config) for n in names]
    return sorted(reports, key=lambda r: r.check_id)


def reports_to_json(reports, config: RunConfig) -> str:
    doc = {
        "version": __version__,
        "seed": config.seed,
        "all_hold": all(r.holds for r in reports),
        "reports": [r.as_dict(config.timings) for r in reports],
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def reports_to_csv(reports, config: RunConfig) -> str:
    """One row per reported value; the other columns repeat per check."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["check_id", "paper_ref", "inputs_digest", "holds", "tolerance", "name", "value"]
    if config.timings:
        header.append("runtime_ms")
    writer.writerow(header)
    for r in reports:
        for name, value in r.values.items():
            row = [r.check_id, r.paper_ref, r.inputs_digest, r.holds, repr(r.tolerance), name, repr(value)]
            if config.timings:
                row.append(repr(r.runtime_ms))
            writer.writerow(row)
    return buf.getvalue()
