"""Command-line interface.

Exit codes: 0 when the verdict is affirmative (or the command just reports
data), 1 when it is negative, 2 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import __version__
from ._numbers import exact, fmt
from .comparison import (
    PiecewiseFn,
    check_boyd_wong,
    check_comparison,
    check_matkowski,
    check_pasicki,
    check_phi_membership,
    max_combine,
    monotone_envelope,
)
from .constructions import orbit_max_space, star_space, verify_inheritance
from .expr import ParseError
from .io import InstanceError, canonical_hash, load_instance, load_json, parse_map
from .solver import (
    OracleMismatch,
    SolveOptions,
    brute_force_fixed_points,
    gaps_csv,
    mode_from_name,
    power_map_reduction,
    solve_fixed_point,
)
from .spaces import (
    SamplerConfig,
    check_w3,
    classify_axioms,
    find_jms_pair,
    jms_witness,
)

SEED_ENV = "DCSFIX_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _load_fn(source: str, name: Optional[str] = None) -> tuple:
    """``(function, hash)`` from a function file, inline JSON or an instance."""
    data = load_json(source)
    if isinstance(data, dict) and "functions" in data:
        fns = data["functions"]
        if name is None:
            if len(fns) != 1:
                raise UsageError(f"{source} defines {len(fns)} functions; pick one with --name")
            name = next(iter(fns))
        if name not in fns:
            raise UsageError(f"{source}: undefined function {name!r}")
        data = fns[name]
    try:
        return PiecewiseFn.from_json(data), canonical_hash(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise InstanceError([f"{source}: {exc}"]) from None


def _sampler(args) -> SamplerConfig:
    return SamplerConfig(seed=args.seed)


# -------------------------------------------------------------------------
# commands; each returns (exit code, result dict, instance hash)


def cmd_classify(args):
    inst = load_instance(args.instance)
    space = inst.space
    sampler = _sampler(args)
    axioms = classify_axioms(space, SamplerConfig(seed=args.seed, grid_points=25, random_points=16))
    out = {"axioms": axioms.to_json(), "taxonomy": axioms.taxonomy}
    if space.kind == "finite":
        out["w3"] = check_w3(space).to_json()
        delta, eta, route = find_jms_pair(space)
        out["jms"] = {"delta": fmt(delta), "eta": fmt(eta), "route": route}
        out["jms_witnesses"] = [
            jms_witness(space, r).to_json() for r in space.distinct_values() if r > 0
        ]
    else:
        pts, fin = space.sample(sampler)
        out["w3"] = dict(check_w3(fin).to_json(), coverage={"sampled": sampler.to_json()})
        out["jms_witnesses"] = [jms_witness(space, exact(args.radius), sampler=sampler).to_json()]
    return 0, out, inst.sha256


def cmd_check_fn(args):
    f, digest = _load_fn(args.function, args.name)
    phi = check_phi_membership(f)
    out = {
        "comparison": check_comparison(f).to_json(),
        "phi": phi.to_json(),
        "boyd_wong": check_boyd_wong(f).to_json(),
        "pasicki": check_pasicki(f).to_json(),
        "matkowski": check_matkowski(f).to_json(),
    }
    return (0 if phi.verdict else 1), out, digest


def cmd_envelope(args):
    f, digest = _load_fn(args.function, args.name)
    return 0, {"envelope": monotone_envelope(f).to_json()}, digest


def cmd_combine(args):
    loaded = [_load_fn(s) for s in args.functions]
    try:
        h = max_combine([f for f, _ in loaded], require_phi=not args.allow_non_phi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = {"combined": h.to_json(), "phi": check_phi_membership(h).verdict}
    return 0, out, canonical_hash([d for _, d in loaded])


def _mode(args, inst):
    spec = dict(inst.mode or {})
    name = args.mode or spec.get("name")
    if name is None:
        raise UsageError("no mode given (use --mode or a 'mode' block in the instance)")
    refs = args.fn if args.fn else spec.get("functions", [])
    fns = []
    for ref in refs:
        if ref not in inst.functions:
            raise InstanceError([f"mode: undefined function {ref!r}"])
        fns.append(inst.functions[ref])
    alpha = args.alpha if args.alpha is not None else spec.get("alpha")
    n = args.n if args.n is not None else spec.get("n", 1)
    try:
        return mode_from_name(name, fns, alpha=alpha, n=int(n))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _start(space, text):
    if space.kind == "finite":
        if text in space.points:
            return text
        try:
            i = int(text)
        except (TypeError, ValueError):
            raise UsageError(f"unknown start point {text!r}") from None
        if not 0 <= i < space.n:
            raise UsageError(f"start index {i} out of range")
        return i
    try:
        return exact(text)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad start point: {exc}") from None


def _solve_setup(args):
    inst = load_instance(args.instance)
    if inst.map is None:
        raise UsageError("the instance has no map")
    opts_in = inst.options
    x0 = args.start if args.start is not None else opts_in.get("x0")
    if x0 is None:
        raise UsageError("no start point (use --from or options.x0)")
    alternate = args.alternate if args.alternate is not None else opts_in.get("alternate")
    opts = SolveOptions(
        tol=float(args.tol if args.tol is not None else opts_in.get("tol", 1e-9)),
        max_iter=int(args.max_iter if args.max_iter is not None else opts_in.get("max_iter", 100_000)),
        window=int(args.window if args.window is not None else opts_in.get("window", 8)),
        seed=args.seed,
        alternate=float(exact(alternate)) if alternate is not None else None,
        force=args.force,
        sampler=_sampler(args),
    )
    return inst, _mode(args, inst), _start(inst.space, str(x0)), opts


def _write_gaps(args, result):
    if args.gaps_csv and result.orbit is not None:
        with open(args.gaps_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(gaps_csv(result.orbit))


def cmd_solve(args):
    inst, mode, x0, opts = _solve_setup(args)
    result = solve_fixed_point(inst.space, inst.map, mode, x0, opts)
    _write_gaps(args, result)
    return (0 if result.solved else 1), result.to_json(full=args.full), inst.sha256


def cmd_power(args):
    inst, mode, x0, opts = _solve_setup(args)
    result = power_map_reduction(inst.space, inst.map, args.l, mode, x0, opts)
    _write_gaps(args, result)
    return (0 if result.solved else 1), result.to_json(full=args.full), inst.sha256


def cmd_oracle(args):
    inst = load_instance(args.instance)
    if inst.map is None:
        raise UsageError("the instance has no map")
    try:
        fixed = brute_force_fixed_points(inst.space, inst.map)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = {"fixed_points": sorted(fixed), "unique": len(fixed) == 1}
    return (0 if len(fixed) == 1 else 1), out, inst.sha256


def cmd_derive(args):
    inst = load_instance(args.instance)
    if inst.map is None:
        raise UsageError("the instance has no map")
    if inst.space.kind != "finite":
        raise UsageError("derived spaces need a finite instance")
    if args.kind == "star":
        derived = star_space(inst.space, inst.map)
    else:
        g = None
        if args.g:
            try:
                g = parse_map(load_json(args.g))
            except (ValueError, KeyError, TypeError) as exc:
                raise InstanceError([f"--g: {exc}"]) from None
        derived = orbit_max_space(inst.space, inst.map, g, args.n)
    report = verify_inheritance(derived, seed=args.seed)
    derived_instance = {"space": derived.to_json(), "map": inst.map.to_json()}
    out = {"derived": derived_instance, "inheritance": report.to_json()}
    return (0 if report.holds else 1), out, inst.sha256


# -------------------------------------------------------------------------
# output


def _render_text(value, indent=0) -> list:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for k in sorted(value):
            v = value[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(value, list):
        if all(not isinstance(v, (dict, list)) for v in value):
            lines.append(pad + ", ".join(_scalar(v) for v in value))
        else:
            for v in value:
                lines.append(f"{pad}-")
                lines.extend(_render_text(v, indent + 1))
    else:
        lines.append(pad + _scalar(value))
    return lines


def _scalar(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (list, dict)):
        return "[]" if isinstance(v, list) else "{}"
    return str(v)


def render(report: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)
    return "\n".join(_render_text(report))


# -------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--seed", type=int, default=None, help=f"sampler seed (default ${SEED_ENV} or 0)")


def _add_solve_flags(p):
    p.add_argument("instance")
    p.add_argument("--mode", choices=["banach", "nonlinear", "extended", "iterated", "quasi"])
    p.add_argument("--from", dest="start", help="start point: label or index (finite), number (analytic)")
    p.add_argument("--fn", action="append", help="function name from the instance; repeat for three")
    p.add_argument("--alpha", help="contraction constant for banach mode")
    p.add_argument("--n", type=int, help="depth for iterated mode")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--alternate", help="second start point for analytic uniqueness evidence")
    p.add_argument("--force", action="store_true", help="iterate even if the hypothesis fails")
    p.add_argument("--full", action="store_true", help="include the whole orbit and gap traces")
    p.add_argument("--gaps-csv", metavar="PATH", help="write n, a_n, c_n to a CSV file")
    _add_common(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcsfix", description="Fixed points in distance spaces without axioms.")
    parser.add_argument("--version", action="version", version=f"dcsfix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="axioms, taxonomy, (W3) and (JMS) of a space")
    p.add_argument("instance")
    p.add_argument("--radius", default="1", help="JMS radius r for analytic spaces")
    _add_common(p)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("check-fn", help="verdicts for a piecewise-affine function")
    p.add_argument("function")
    p.add_argument("--name", help="function name when the file holds several")
    _add_common(p)
    p.set_defaults(run=cmd_check_fn)

    p = sub.add_parser("envelope", help="monotone envelope of a function")
    p.add_argument("function")
    p.add_argument("--name")
    _add_common(p)
    p.set_defaults(run=cmd_envelope)

    p = sub.add_parser("combine", help="pointwise max of functions")
    p.add_argument("functions", nargs="+")
    p.add_argument("--allow-non-phi", action="store_true")
    _add_common(p)
    p.set_defaults(run=cmd_combine)

    p = sub.add_parser("solve", help="certify a mode and run Picard iteration")
    _add_solve_flags(p)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("power", help="solve for f^l and lift the fixed point to f")
    _add_solve_flags(p)
    p.add_argument("--l", type=int, required=True)
    p.set_defaults(run=cmd_power)

    p = sub.add_parser("oracle", help="brute-force fixed points of a finite instance")
    p.add_argument("instance")
    _add_common(p)
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("derive", help="derived distance and inheritance report")
    p.add_argument("instance")
    p.add_argument("--kind", choices=["star", "orbit-max"], required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--g", help="second map (JSON or path) for orbit-max")
    _add_common(p)
    p.set_defaults(run=cmd_derive)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if getattr(args, "l", 1) is not None and getattr(args, "l", 1) < 1:
            raise UsageError("--l must be at least 1")
        if getattr(args, "n", None) is not None and args.command == "derive" and args.n < 1:
            raise UsageError("--n must be at least 1")
        code, result, digest = args.run(args)
    except InstanceError as exc:
        for e in exc.errors:
            print(f"dcsfix: error: {e}", file=sys.stderr)
        return 2
    except (UsageError, ParseError, ValueError, KeyError) as exc:
        print(f"dcsfix: error: {exc}", file=sys.stderr)
        return 2
    except OracleMismatch as exc:
        print(f"dcsfix: internal error: {exc}", file=sys.stderr)
        return 2
    report = {
        "command": args.command,
        "tool": "dcsfix",
        "version": __version__,
        "instance_sha256": digest,
        "seed": args.seed,
        "result": result,
    }
    print(render(report, args.format))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
