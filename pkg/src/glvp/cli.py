"""Command-line front end: ``glvp analyze | transform | darboux | simulate | verify``.

Reports go to standard output and diagnostics to standard error.  Exit codes:
0 success, 1 verification failure, 2 input error, 3 system is not GLVP,
4 conservation drift above tolerance, 5 integration blew up.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import suite
from .darboux import ROUTES
from .dynamics import DEFAULT_SAMPLES, conservation_report, default_times, integrate_glv
from .errors import BlowUp, GLVError, StepUnderflow
from .glv import EmbeddingSpec, apply_qmt, decouple, embed, prepare_decoupling, quasimonomial_invariants
from .poisson import (
    Casimir,
    NotGLVP,
    decouple_factorization,
    embed_factorization,
    hamiltonian,
    transform_factorization,
)
from .ratmat import RatMatrix
from .report import analysis_report, resolve_factorization
from .systemfile import SystemFileError, dumps, load, parse_rational_matrix

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_NOT_GLVP = 3
EXIT_DRIFT = 4
EXIT_BLOWUP = 5


class UsageError(Exception):
    pass


def _emit_json(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def _rationals(text: str, what: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(v.strip()) for v in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{what}: expected comma-separated rationals, got {text!r}") from None


def _floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _load_qmt(arg: str, n: int) -> RatMatrix:
    if arg == "identity":
        return RatMatrix.identity(n)
    try:
        with open(arg) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {arg}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{arg}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict):
        if "C" not in doc:
            raise SystemFileError(f"{arg}: missing field 'C'")
        doc = doc["C"]
    return parse_rational_matrix(doc, "C")


def cmd_analyze(args) -> int:
    system, fac = load(args.input)
    report, glvp = analysis_report(system, fac)
    _emit_json(report)
    return EXIT_OK if glvp else EXIT_NOT_GLVP


def cmd_transform(args) -> int:
    system, fac = load(args.input)
    alpha = _rationals(args.alpha, "--alpha") if args.alpha else ()
    if args.qmt is not None:
        C = _load_qmt(args.qmt, system.n)
        out = apply_qmt(system, C)
        out_f = transform_factorization(fac, C) if fac is not None else None
    elif args.embed is not None:
        spec = EmbeddingSpec(args.embed, alpha)
        out = embed(system, spec)
        out_f = embed_factorization(system, fac, spec) if fac is not None else None
    else:
        p = args.decouple
        if fac is not None:
            out, out_f, _ = decouple_factorization(system, fac, p, alpha or None)
        else:
            C = prepare_decoupling(system, p)
            out, out_f = decouple(apply_qmt(system, C), p, alpha or None), None
    sys.stdout.write(dumps(out, out_f))
    return EXIT_OK


def cmd_darboux(args) -> int:
    system, fac = load(args.input)
    f, _ = resolve_factorization(system, fac)
    if isinstance(f, NotGLVP):
        print(f"not a GLVP system: {f}", file=sys.stderr)
        return EXIT_NOT_GLVP
    if args.method == "decoupling":
        alpha = _rationals(args.alpha, "--alpha") if args.alpha else None
        d = ROUTES["decoupling"](system, f, alpha)
    else:
        d = ROUTES[args.method](system, f)
    doc = d.to_dict()
    doc["H"]["text"] = str(d.H)
    _emit_json(doc)
    return EXIT_OK


def _conserved_quantities(system, fac):
    """H (when the system is GLVP) and one quasimonomial invariant per left-kernel vector of M."""
    quantities, labels = [], []
    f, _ = resolve_factorization(system, fac)
    if not isinstance(f, NotGLVP):
        quantities.append(hamiltonian(system, f))
        labels.append("H")
    for N in quasimonomial_invariants(system):
        quantities.append(Casimir(N))
        labels.append("invariant " + "(" + ",".join(str(v) for v in N) + ")")
    return quantities, labels


def cmd_simulate(args) -> int:
    system, fac = load(args.input)
    x0 = _floats(args.x0, "--x0")
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    if not args.t_end > 0:
        raise UsageError("--t-end must be positive")
    try:
        traj = integrate_glv(system, x0, args.t_end, args.rel_tol, default_times(args.t_end, args.samples))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except (BlowUp, StepUnderflow) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    if args.output:
        with open(args.output, "w", newline="") as fh:
            traj.write_csv(fh)
    else:
        traj.write_csv(sys.stdout)
    if not args.check_conservation:
        return EXIT_OK
    quantities, labels = _conserved_quantities(system, fac)
    report = conservation_report(traj, quantities, labels)
    doc = report.to_dict()
    doc["drift_tol"] = args.drift_tol
    exceeded = report.worst_relative > args.drift_tol
    doc["within_tolerance"] = not exceeded
    _emit_json(doc)
    if exceeded:
        print(f"relative drift {report.worst_relative:.3e} exceeds {args.drift_tol:g}", file=sys.stderr)
        return EXIT_DRIFT
    return EXIT_OK


def cmd_verify(args) -> int:
    names = args.only or list(suite.ALL_CHECKS)
    unknown = [n for n in names if n not in suite.ALL_CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}")
    ok = True
    for name in names:
        result = suite.ALL_CHECKS[name]()
        print(result.line())
        ok &= result.passed
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glvp", description="Poisson structure of generalized Lotka-Volterra systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="class signature, GLVP verdict, Casimirs and Hamiltonian")
    p.add_argument("input")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="apply a QMT, an embedding or a decoupling")
    p.add_argument("input")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--qmt", metavar="FILE|identity", help="JSON matrix C (or {\"C\": ...})")
    group.add_argument("--embed", type=int, metavar="P", help="add P frozen variables")
    group.add_argument("--decouple", type=int, metavar="P", help="drop P invariant directions")
    p.add_argument("--alpha", help="comma-separated positive rationals for the frozen variables")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("darboux", help="reduce the structure matrix to Darboux canonical form")
    p.add_argument("input")
    p.add_argument("--method", choices=sorted(ROUTES), default="general")
    p.add_argument("--alpha", help="Casimir levels for --method decoupling (default all 1)")
    p.set_defaults(func=cmd_darboux)

    p = sub.add_parser("simulate", help="integrate the system and write a CSV trajectory")
    p.add_argument("input")
    p.add_argument("--x0", required=True, help="comma-separated positive initial state")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="number of evenly spaced output intervals")
    p.add_argument("--check-conservation", action="store_true")
    p.add_argument("--drift-tol", type=float, default=1e-5)
    p.add_argument("--output", help="write the CSV here instead of standard output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the property suite (seed from $SEED, default 0)")
    p.add_argument("--only", nargs="+", metavar="CHECK", help=f"subset of: {', '.join(suite.ALL_CHECKS)}")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, GLVError) as exc:
        print(f"glvp {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
