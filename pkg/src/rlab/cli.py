"""Command-line entry point: ``rlab <subcommand> ...``.

Exit status is 0 when everything checked holds, 1 when some check fails and
2 for unusable input (bad files, unknown names, invalid options).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .fileformats import (
    ParseError,
    format_grid_field,
    parse_family_file,
    parse_function_file,
    parse_grid_file,
    parse_hamiltonian,
)
from .flow import (
    EXACT_LINEAR,
    LEAPFROG,
    FlowSpec,
    LinearMap,
    flow,
    is_symplectic_map,
    pullback,
    volume_check,
)
from .functional import (
    FIXED,
    OVER_REARRANGEMENTS,
    ConstantFamilyError,
    NoBranchError,
    SupportFamily,
    alpha_curves,
    evaluate,
    family_l1_crosscheck,
    family_l1_norm_bound,
    l1_lower_bound,
    lipschitz_report,
    minkowski_functional,
    ri_norm,
    ri_norm_axiom_report,
)
from .grid import COMPACT, OutsideBoxError
from .hessian import ClusteredCriticalPointsError, counterexample_map, image_box, p_functional_report
from .quadratic import QuadraticForm, cutoff_phi
from .rearrange import (
    NotSimilarlyOrderedError,
    SpaceMismatchError,
    abs_sup_bound_check,
    chebyshev_lower,
    conv1_average_on,
    conv1_two_block,
    katok_transport,
    pairing_lower_bound,
    pairing_value_invariance_check,
    product_abs_bound_check,
    split_to_equal_mass,
    sup_pairing,
)
from .rng import CounterRNG
from .suite import (
    RunConfig,
    UnknownCheckError,
    check_ids,
    load_config,
    reports_to_csv,
    reports_to_json,
    resolve_seed,
    run_suite,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
DEFAULT_TOL = 1e-9


class InputError(Exception):
    pass


def _num(x):
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return float(x)


def _exact(x) -> str:
    return str(x) if isinstance(x, (int, Fraction)) else repr(float(x))


def _indices(text):
    if text is None or text.strip() == "":
        return []
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"bad cell list {text!r}") from None


def _floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"bad {what} {text!r}") from None


def _pick(functions: dict, name, what):
    if name is None:
        raise InputError(f"--{what} is required")
    if name not in functions:
        raise InputError(f"no function named {name!r}")
    return functions[name]


# --- rearrange ------------------------------------------------------------------


REARRANGE_OPS = (
    "sup", "invariance", "chebyshev", "abs-bound", "product-bound",
    "conv1", "two-block", "lower-bound", "katok", "split",
)


def _cmd_rearrange(args, config):
    space, functions = parse_function_file(args.file)
    names = list(functions)
    refined = dict(zip(names, split_to_equal_mass(list(functions.values()))))
    phi = _pick(refined, args.phi or (names[0] if names else None), "phi")
    psi = refined.get(args.psi) if args.psi else None
    if args.psi and psi is None:
        raise InputError(f"no function named {args.psi!r}")
    needs_psi = args.op not in ("conv1", "two-block", "split")
    if needs_psi and psi is None:
        raise InputError(f"--psi is required for {args.op}")
    tol = args.tolerance
    out = {"op": args.op, "inputs": {"file": str(args.file), "phi": args.phi or names[0], "psi": args.psi}}
    if args.op == "sup":
        p = sup_pairing(phi, psi)
        out.update(value=_num(p.value), exact=_exact(p.value), witness=list(p.witness))
    elif args.op == "invariance":
        ok = pairing_value_invariance_check(phi, psi, CounterRNG(config.seed, 0))
        out.update(value=ok, holds=ok)
    elif args.op == "chebyshev":
        lhs, rhs = chebyshev_lower(phi, psi)
        holds = float(lhs) >= float(rhs) - tol * max(1.0, abs(float(rhs)))
        out.update(value=_num(lhs), bound=_num(rhs), holds=holds)
    elif args.op in ("abs-bound", "product-bound"):
        fn = abs_sup_bound_check if args.op == "abs-bound" else product_abs_bound_check
        rep = fn(phi, psi, tol)
        out.update(value=_num(rep.lhs), bound=_num(rep.rhs), holds=rep.holds)
    elif args.op == "conv1":
        f = conv1_average_on(phi, _indices(args.set))
        out.update(value=[_num(v) for v in f.values])
    elif args.op == "two-block":
        f = conv1_two_block(phi, _indices(args.S), _indices(args.T))
        out.update(value=[_num(v) for v in f.values])
    elif args.op == "lower-bound":
        bound, sup = pairing_lower_bound(phi, psi, _indices(args.S), _indices(args.T))
        holds = sup >= bound if tol == 0 else float(sup) >= float(bound) - tol * max(1.0, abs(float(bound)))
        out.update(value=_num(sup), bound=_num(bound), holds=bool(holds))
    elif args.op == "katok":
        if args.epsilon is None:
            raise InputError("--epsilon is required for katok")
        plan = katok_transport(phi, psi, args.epsilon, within=args.within)
        out.update(
            value=_num(plan.error),
            witness=list(plan.permutation),
            bound=plan.bound,
            holds=plan.holds,
            interval_length=plan.interval_length,
            intervals=[list(iv) for iv in plan.intervals],
        )
    elif args.op == "split":
        out.update(
            value={name: [_num(v) for v in f.values] for name, f in refined.items()},
            masses=[_num(m) for m in next(iter(refined.values())).space.masses],
        )
    out["tolerance"] = tol
    return out, out.get("holds", True)


# --- functional --------------------------------------------------------------------


def _load_family(path):
    space, functions, family = parse_family_file(path)
    names = list(functions)
    pair_names = []
    for a, f in family.pairs:
        pair_names.append(next(n for n in names if functions[n] is f))
    refined = dict(zip(names, split_to_equal_mass([functions[n] for n in names])))
    family = SupportFamily(
        tuple((a, refined[n]) for (a, _), n in zip(family.pairs, pair_names)),
        family.rearrangement_closed,
    )
    return refined, family


def _xi(args, functions):
    return _pick(functions, args.xi, "xi")


def _cmd_functional(args, config):
    functions, family = _load_family(args.file)
    mode = args.mode or family.default_mode()
    out = {"op": args.op, "inputs": {"file": str(args.file), "xi": args.xi, "mode": mode}}
    holds = True
    if args.op == "eval":
        xi = _xi(args, functions)
        value = evaluate(family, xi, mode)
        out.update(value=_num(value), exact=_exact(value))
        curves = {}
        for k, f in enumerate(family.functions):
            if not f.is_constant():
                ac = alpha_curves(f)
                curves[str(k)] = {"c": float(ac.c), "m": float(ac.m)}
        out["alpha_constants"] = curves
    elif args.op == "bound":
        xi = _xi(args, functions)
        rep = l1_lower_bound(family, xi, args.tolerance)
        holds = rep.holds
        out.update(
            value=_num(rep.q_value), bound=rep.bound, a0=rep.a0, b=rep.b,
            branch=rep.branch, holds=rep.holds,
            family_l1_norm=_num(family_l1_norm_bound(family)),
        )
        nonneg = xi.with_values(max(v, 0) for v in xi.values)
        try:
            cross = family_l1_crosscheck(family, nonneg, args.tolerance)
            out["l1_crosscheck"] = [
                {"pair": c.pair_index, "part": c.part, "integral": c.integral, "bound": c.bound, "holds": c.holds}
                for c in cross
            ]
        except ValueError as exc:
            out["l1_crosscheck"] = f"skipped: {exc}"
    elif args.op == "minkowski":
        xi = _xi(args, functions)
        if args.c is None:
            raise InputError("--c is required for minkowski")
        out.update(value=minkowski_functional(family, args.c, xi, mode), c=args.c)
    elif args.op == "rinorm":
        xi = _xi(args, functions)
        value = ri_norm(family, xi)
        out.update(value=_num(value), exact=_exact(value))
    elif args.op == "axioms":
        rep = ri_norm_axiom_report(family, trials=args.trials, seed=config.seed, rel_tol=args.tolerance)
        holds = rep.holds
        out.update(
            holds=rep.holds, trials=rep.trials, b_embedding=rep.b_embedding, b_lower=rep.b_lower,
            checks={
                k: {"passed": r.passed, "failed": r.failed, "max_violation": r.max_violation}
                for k, r in rep.checks.items()
            },
        )
    elif args.op == "lipschitz":
        rep = lipschitz_report(family, args.radius, trials=args.trials, seed=config.seed, mode=mode)
        holds = rep.holds
        out.update(
            value=rep.max_ratio, bound=rep.bound, M=rep.M, holds=rep.holds,
            operator_bound=rep.operator_bound, pairs_used=rep.pairs_used,
        )
    out["tolerance"] = args.tolerance
    return out, holds


# --- flow -----------------------------------------------------------------------------


def _cmd_flow(args, config):
    H = parse_hamiltonian(args.hamiltonian)
    spec = FlowSpec(H, args.duration, args.steps, args.method)
    g = flow(spec)
    out = {
        "op": "flow",
        "inputs": {"hamiltonian": args.hamiltonian, "duration": args.duration,
                   "steps": args.steps, "method": args.method},
    }
    holds = True
    if isinstance(g, LinearMap):
        out["matrix"] = g.matrix.tolist()
        out["symplectic"] = is_symplectic_map(g)
        holds &= out["symplectic"]
    if args.points:
        pts = np.array([_floats(p, "point") for p in args.points.split(";")])
        if pts.shape[1] != g.dim:
            raise InputError(f"points need {g.dim} coordinates")
        out["images"] = g(pts).tolist()
    if args.check_volume:
        box = None if isinstance(H, QuadraticForm) else H.box
        rep = volume_check(g, samples=args.samples, box=box, seed=config.seed)
        ok = rep.max_jacobian_deviation <= args.tolerance
        out["volume"] = {"max_jacobian_deviation": rep.max_jacobian_deviation,
                         "samples": rep.samples, "holds": ok}
        holds &= ok
    if args.field:
        xi = parse_grid_file(args.field)
        eta = pullback(g, xi, allow_extrapolation=args.extrapolate)
        out["pullback"] = {
            "integral_before": xi.integral(),
            "integral_after": eta.integral(),
            "interpolation_error": eta.error,
        }
        if args.write_field:
            Path(args.write_field).write_text(format_grid_field(eta))
            out["pullback"]["written"] = args.write_field
    out["holds"] = bool(holds)
    out["tolerance"] = args.tolerance
    return out, holds


# --- hessian --------------------------------------------------------------------------


def _points_json(rep):
    return [
        {
            "location": list(p.location),
            "det": p.det_q,
            "t": p.t_q,
            "phi_det_t": p.weighted,
            "phi_det": cutoff_phi(p.det_q),
            "hessian_error": p.hessian_error,
            "t_error": p.t_error,
        }
        for p in rep.points
    ]


def _cmd_hessian(args, config):
    xi = parse_grid_file(args.field)
    rep = p_functional_report(xi, args.threshold)
    out = {
        "op": "hessian",
        "inputs": {"field": str(args.field), "threshold": args.threshold, "map": args.map},
        "critical_points": _points_json(rep),
        "p": rep.value,
        "t_error": rep.t_error,
    }
    if args.map:
        c = _floats(args.map, "map")
        if len(c) != xi.box.n:
            raise InputError(f"--map needs {xi.box.n} exponents")
        g = counterexample_map(c)
        target = image_box(xi.box, g) if xi.box.boundary == COMPACT else None
        if target is None:
            raise InputError("--map needs a compact_support field")
        after = p_functional_report(pullback(g, xi, target=target), args.threshold)
        out["after_map"] = {
            "critical_points": _points_json(after),
            "p": after.value,
            "t_error": after.t_error,
            "difference": after.value - rep.value,
        }
    out["tolerance"] = args.threshold
    return out, True


# --- suite ------------------------------------------------------------------------------


def _cmd_suite(args, config):
    if args.list:
        return {"checks": check_ids()}, True
    if args.timings:
        config.timings = True
    if args.jobs:
        config.jobs = args.jobs
    names = args.checks if args.checks else None
    if args.checks == ["all"]:
        names = None
    if names is not None and not names:
        names = []
    reports = run_suite(names, config)
    return reports, all(r.holds for r in reports)


# --- plumbing ----------------------------------------------------------------------------


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def _render(result, config) -> str:
    if isinstance(result, list):
        return reports_to_json(result, config) if config.format == "json" else reports_to_csv(result, config)
    if config.format == "json":
        return json.dumps(result, indent=2, allow_nan=False, default=_num) + "\n"
    rows: list = []
    _flatten("", result, rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows((k, "" if v is None else v) for k, v in rows)
    return buf.getvalue()


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=default,
                        help="run seed (overrides RL_SEED and the config file)")
    parser.add_argument("--config", default=default, help="JSON config file")
    parser.add_argument("--out", default=default, help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rlab {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rearrange", parents=[common], help="pairing suprema and inequalities")
    p.add_argument("op", choices=REARRANGE_OPS)
    p.add_argument("file", help="function-spec file")
    p.add_argument("--phi", help="first function (default: the first in the file)")
    p.add_argument("--psi", help="second function")
    p.add_argument("--set", help="cells for conv1, e.g. '0,1'")
    p.add_argument("--S", help="source cells for two-block and lower-bound")
    p.add_argument("--T", help="target cells for two-block and lower-bound")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--within", choices=("sorted", "index"), default="sorted")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    p.set_defaults(handler=_cmd_rearrange)

    p = sub.add_parser("functional", parents=[common], help="support-family functionals")
    p.add_argument("op", choices=("eval", "bound", "minkowski", "rinorm", "axioms", "lipschitz"))
    p.add_argument("file", help="family-spec file")
    p.add_argument("--xi", help="function to evaluate at")
    p.add_argument("--mode", choices=(FIXED, OVER_REARRANGEMENTS))
    p.add_argument("--c", type=float, help="sublevel for minkowski")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--radius", type=float, default=1.0, help="ball radius for lipschitz")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    p.set_defaults(handler=_cmd_functional)

    p = sub.add_parser("flow", parents=[common], help="Hamiltonian flows and pullbacks")
    p.add_argument("--hamiltonian", required=True, help="grid file or quad:q1,q2,...")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--method", choices=(EXACT_LINEAR, LEAPFROG), default=EXACT_LINEAR)
    p.add_argument("--check-volume", action="store_true")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--points", help="points to map, e.g. '1,0;0,1'")
    p.add_argument("--field", help="grid file to pull back")
    p.add_argument("--extrapolate", action="store_true", help="allow the pullback to leave the box")
    p.add_argument("--write-field", help="write the pulled-back field here")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(handler=_cmd_flow)

    p = sub.add_parser("hessian", parents=[common], help="critical points and the functional p")
    p.add_argument("--field", required=True, help="grid file")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--map", help="exponents c1,c2,... of the diagonal volume-preserving map")
    p.set_defaults(handler=_cmd_hessian)

    p = sub.add_parser("suite", parents=[common], help="run verification checks")
    p.add_argument("checks", nargs="*", help="check ids (default: all)")
    p.add_argument("--list", action="store_true", help="list check ids")
    p.add_argument("--timings", action="store_true", help="include runtime_ms")
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(handler=_cmd_suite)
    return parser


def _config_from(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    config.seed = resolve_seed(args.seed, config)
    if args.format:
        config.format = args.format
    if args.out:
        config.output = args.out
    return config


INPUT_ERRORS = (
    InputError,
    ParseError,
    OSError,
    UnknownCheckError,
    SpaceMismatchError,
    NotSimilarlyOrderedError,
    ConstantFamilyError,
    NoBranchError,
    OutsideBoxError,
    ClusteredCriticalPointsError,
    ValueError,
    TypeError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from(args)
        result, holds = args.handler(args, config)
        text = _render(result, config)
    except INPUT_ERRORS as exc:
        print(f"rlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if holds else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
