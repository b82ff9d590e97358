"""JSON-ready analysis reports."""

from __future__ import annotations

from .glv import GLVSystem, class_signature, quasimonomial_invariants
from .poisson import GLVPFactorization, NotGLVP, casimirs, check_jacobi, hamiltonian, solve_factorization, verify_factorization
from .ratmat import format_rational, rank
from .systemfile import matrix_to_json


def factorization_to_dict(f: GLVPFactorization) -> dict:
    return {
        "K": matrix_to_json(f.K),
        "D_diag": [format_rational(v) for v in f.D],
        "L": [format_rational(v) for v in f.L.col(0)],
    }


def resolve_factorization(sys: GLVSystem, f: GLVPFactorization | None) -> tuple[GLVPFactorization | NotGLVP, str]:
    """Use the supplied factorization if it verifies, otherwise search for one."""
    if f is not None:
        if verify_factorization(sys, f):
            return f, "supplied"
        return NotGLVP("supplied factorization fails verification"), "supplied"
    return solve_factorization(sys), "solved"


def analysis_report(sys: GLVSystem, f: GLVPFactorization | None = None) -> tuple[dict, bool]:
    sig = class_signature(sys)
    result, source = resolve_factorization(sys, f)
    report = {
        "system": sys.name,
        "class": {"r": sig.r, "n": sig.n, "m": sig.m},
        "ranks": {"M": sig.r, "A": rank(sys.A)},
        "quasimonomial_invariants": [list(v) for v in quasimonomial_invariants(sys)],
    }
    if isinstance(result, NotGLVP):
        report["verdict"] = "NotGLVP"
        report["diagnosis"] = {"reason": result.reason, "detail": result.detail}
        return report, False
    H = hamiltonian(sys, result)
    report["ranks"]["K"] = rank(result.K)
    report["verdict"] = "GLVP"
    report["factorization_source"] = source
    report["factorization"] = factorization_to_dict(result)
    report["casimirs"] = [list(c.N) for c in casimirs(result)]
    report["hamiltonian"] = {**H.to_dict(), "text": str(H)}
    report["jacobi_residual"] = format_rational(check_jacobi(result))
    return report, True
