"""JSON system files.

::

    {"name": "...", "n": 3, "m": 3,
     "lambda": [1, 2, 1],
     "A": [[0, -1, 1], ...], "B": [[1, 0, 0], ...],
     "factorization": {"K": [[...]], "D_diag": [...], "L": [...]}}   # optional

Rationals are JSON integers or "p/q" strings, so files round-trip exactly.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import GLVError
from .glv import GLVSystem
from .poisson import GLVPFactorization
from .ratmat import RatMatrix, format_rational


class SystemFileError(GLVError):
    """Malformed system file; the message names the offending line or field."""


def _rational(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise SystemFileError(f"{where}: expected an integer or a \"p/q\" string, got {value!r}")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise SystemFileError(f"{where}: cannot parse rational {value!r}") from None


def _vector(value, length: int, where: str) -> list[Fraction]:
    if not isinstance(value, list) or len(value) != length:
        raise SystemFileError(f"{where}: expected a list of {length} rationals")
    return [_rational(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _matrix(value, rows: int, cols: int, where: str) -> RatMatrix:
    if not isinstance(value, list) or len(value) != rows:
        raise SystemFileError(f"{where}: expected {rows} rows")
    return RatMatrix([_vector(r, cols, f"{where}[{i}]") for i, r in enumerate(value)], cols=cols)


def parse_rational_matrix(value, where: str = "matrix") -> RatMatrix:
    """A rectangular JSON matrix of rationals of any shape."""
    if not isinstance(value, list) or not value or not isinstance(value[0], list):
        raise SystemFileError(f"{where}: expected a non-empty list of rows")
    return _matrix(value, len(value), len(value[0]), where)


def system_from_dict(doc) -> tuple[GLVSystem, GLVPFactorization | None]:
    if not isinstance(doc, dict):
        raise SystemFileError("top level must be a JSON object")
    for key in ("n", "m", "lambda", "A", "B"):
        if key not in doc:
            raise SystemFileError(f"missing field {key!r}")
    n, m = doc["n"], doc["m"]
    if not (isinstance(n, int) and isinstance(m, int)) or n < 1 or m < 1:
        raise SystemFileError("fields 'n' and 'm' must be positive integers")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SystemFileError("field 'name' must be a string")
    lam = RatMatrix.column(_vector(doc["lambda"], n, "lambda"))
    A = _matrix(doc["A"], n, m, "A")
    B = _matrix(doc["B"], m, n, "B")
    try:
        sys = GLVSystem(B, A, lam, name)
    except GLVError as exc:
        raise SystemFileError(str(exc)) from None
    fac = None
    if doc.get("factorization") is not None:
        fd = doc["factorization"]
        if not isinstance(fd, dict):
            raise SystemFileError("factorization must be an object")
        for key in ("K", "D_diag", "L"):
            if key not in fd:
                raise SystemFileError(f"missing field factorization.{key}")
        fac = GLVPFactorization(
            _matrix(fd["K"], n, n, "factorization.K"),
            tuple(_vector(fd["D_diag"], m, "factorization.D_diag")),
            RatMatrix.column(_vector(fd["L"], n, "factorization.L")),
        )
    return sys, fac


def loads(text: str) -> tuple[GLVSystem, GLVPFactorization | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return system_from_dict(doc)


def load(path) -> tuple[GLVSystem, GLVPFactorization | None]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def matrix_to_json(M: RatMatrix) -> list[list]:
    return [[format_rational(v) for v in M.row(i)] for i in range(M.rows)]


def system_to_dict(sys: GLVSystem, f: GLVPFactorization | None = None) -> dict:
    doc = {
        "name": sys.name,
        "n": sys.n,
        "m": sys.m,
        "lambda": [format_rational(v) for v in sys.lam.col(0)],
        "A": matrix_to_json(sys.A),
        "B": matrix_to_json(sys.B),
    }
    if f is not None:
        doc["factorization"] = {
            "K": matrix_to_json(f.K),
            "D_diag": [format_rational(v) for v in f.D],
            "L": [format_rational(v) for v in f.L.col(0)],
        }
    return doc


def dumps(sys: GLVSystem, f: GLVPFactorization | None = None) -> str:
    return json.dumps(system_to_dict(sys, f), indent=2) + "\n"


def bundled(name: str) -> Path:
    """Path of a system file shipped in ``glvp/data`` (e.g. ``"nutku"``)."""
    return Path(str(resources.files("glvp") / "data" / f"{name}.json"))
