"""Command line interface.

Exit codes: 0 success, 1 invariant violation or solver failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="platemix", description="Mixed finite elements for clamped plates.")
    p.add_argument("--config", help="JSON file with option defaults (keys as the long flags)")
    sub = p.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="mesh utilities")
    msub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = msub.add_parser("gen", help="generate and validate a square-with-holes mesh")
    gen.add_argument("--outer", type=float, help="side of the outer square [0, L]^2")
    gen.add_argument("--hole", action="append", default=[], metavar="X0,Y0,X1,Y1",
                     help="hole box; repeat for several holes (needs --outer)")
    gen.add_argument("--holes", type=int, default=1, choices=(0, 1, 2),
                     help="canonical domain preset, used when --outer is omitted")
    gen.add_argument("--n", type=int, default=1, help="grid subdivisions per unit length")
    gen.add_argument("--refine", type=int, default=0, help="number of uniform refinements")
    gen.add_argument("--out", help="write the mesh as JSON")

    run = sub.add_parser("run", help="convergence run on the manufactured case")
    run.add_argument("--scheme", default="rm-mixed",
                     choices=("rm-mixed", "rm-reduced", "rm-primal", "k-mixed", "k-reduced",
                              "bfs-check"))
    run.add_argument("--t", type=float, default=1.0, help="thickness (ignored for k-*)")
    run.add_argument("--levels", type=int, default=3)
    run.add_argument("--case", choices=("rm", "kirchhoff"), default=None,
                     help="defaults to kirchhoff for k-* schemes, rm otherwise")
    run.add_argument("--out", help="output file (stdout if omitted)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    inf = sub.add_parser("infsup", help="discrete inf-sup constants on levels 1..L")
    inf.add_argument("--t", type=float, default=1e-3)
    inf.add_argument("--levels", type=int, default=3)
    inf.add_argument("--holes", type=int, default=1, choices=(0, 1, 2))

    ver = sub.add_parser("verify", help="mesh, exact-sequence and commuting checks")
    ver.add_argument("--mesh-levels", type=int, default=3)

    sol = sub.add_parser("solve", help="solve a MatrixMarket system")
    sol.add_argument("--matrix", required=True)
    sol.add_argument("--rhs", required=True, help="whitespace separated vector")
    sol.add_argument("--out", help="solution file (stdout if omitted)")
    sol.add_argument("--tol", type=float, default=1e-10)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "mesh_command", "config"):
            continue
        if not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r} for command {args.command!r}")
        if dest not in explicit:
            setattr(args, dest, value)
    return args


def _parse_box(text: str) -> tuple:
    try:
        box = tuple(float(v) for v in text.split(","))
    except ValueError:
        box = ()
    if len(box) != 4:
        raise UsageError(f"--hole expects X0,Y0,X1,Y1, got {text!r}")
    return box


def _cmd_mesh(args) -> int:
    from .harness import canonical_domain
    from .mesh import MeshError, generate_square_hole_mesh, refine, validate

    if args.refine < 0 or args.n < 1:
        raise UsageError("--refine must be >= 0 and --n >= 1")
    if args.outer is None:
        if args.hole:
            raise UsageError("--hole needs --outer")
        side, boxes = canonical_domain(args.holes)
    else:
        side, boxes = args.outer, [_parse_box(h) for h in args.hole]
    try:
        m = refine(generate_square_hole_mesh(side, boxes, n=args.n), args.refine)
    except MeshError as exc:
        raise UsageError(str(exc)) from exc
    rep = validate(m)
    print(f"V={m.n_vertices} E={m.n_edges} T={m.n_triangles} "
          f"V_int={m.n_interior_vertices} E_int={m.n_interior_edges} J={m.n_holes} h={m.h:.6g}")
    if args.out:
        m.save(args.out)
    for v in rep.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_INVARIANT


def _cmd_run(args) -> int:
    from .harness import make_case, run_convergence, verify_case
    from .schemes import SchemeKind

    kind = SchemeKind.parse(args.scheme)
    case_name = args.case or ("kirchhoff" if kind.is_kirchhoff else "rm")
    if kind.is_kirchhoff != (case_name == "kirchhoff"):
        raise UsageError(f"scheme {kind.value} does not match case {case_name}")
    if case_name == "rm" and not args.t > 0:
        raise UsageError("the rm case needs --t > 0")
    if args.levels < 1:
        raise UsageError("--levels must be >= 1")
    case = make_case(case_name, args.t)
    oracle = verify_case(case)
    if not oracle.ok:
        print(f"manufactured case failed its oracle: {oracle}", file=sys.stderr)
        return EXIT_INVARIANT
    table = run_convergence(kind, case, args.levels)
    text = table.to_csv() if args.format == "csv" else table.to_json() + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_infsup(args) -> int:
    from .harness import canonical_mesh
    from .solver import estimate_infsup

    if not args.t > 0:
        raise UsageError("--t must be positive")
    if args.levels < 1:
        raise UsageError("--levels must be >= 1")
    ok = True
    print("level,h,t,beta")
    for lev in range(1, args.levels + 1):
        m = canonical_mesh(lev, args.holes)
        est = estimate_infsup(m, args.t, lev)
        ok &= est.beta > 0
        print(f"{lev},{m.h!r},{args.t!r},{est.beta!r}")
    return EXIT_OK if ok else EXIT_INVARIANT


def _cmd_verify(args) -> int:
    from .harness import run_invariant_suite

    if args.mesh_levels < 1:
        raise UsageError("--mesh-levels must be >= 1")
    results = run_invariant_suite(args.mesh_levels)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}" + (f" ({r.detail})" if r.detail else ""))
    return EXIT_OK if all(r.ok for r in results) else EXIT_INVARIANT


def _cmd_solve(args) -> int:
    import scipy.io

    from .solver import solve_symmetric_indefinite

    try:
        A = scipy.io.mmread(args.matrix)
        b = np.loadtxt(args.rhs, ndmin=1)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    rep = solve_symmetric_indefinite(A, b, tol=args.tol)
    if args.out:
        np.savetxt(args.out, rep.x, fmt="%.17g")
    else:
        np.savetxt(sys.stdout, rep.x, fmt="%.17g")
    print(f"residual {rep.residual:.3e} method {rep.method}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"mesh": _cmd_mesh, "run": _cmd_run, "infsup": _cmd_infsup, "verify": _cmd_verify,
            "solve": _cmd_solve}


def main(argv=None) -> int:
    from .solver import SolverError

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = _apply_config(parser, argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse reports usage errors this way
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"platemix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"platemix: solver failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"platemix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
