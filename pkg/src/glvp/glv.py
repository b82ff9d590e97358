"""GLV systems and the structural operations on them.

A GLV system on the open positive orthant reads

    dx_i/dt = x_i (lambda_i + sum_j A_ij prod_k x_k ** B_jk)

with ``B`` of shape m x n and maximal rank.  Quasimonomial transformations
(QMTs) ``x_i = prod_k y_k ** C_ik`` map GLV systems to GLV systems and
leave ``B @ M`` unchanged, where ``M = (lambda | A)``.  Embeddings add
frozen variables; decouplings drop variables that have been made constant
by a suitable QMT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CannotComplete, DimensionMismatch, DomainError, InsufficientDegeneracy, InvalidSystem, NotDecoupledForm
from .ratmat import (
    RatMatrix,
    complete_rows,
    complete_to_full_rank,
    from_rows,
    hstack,
    invert,
    left_kernel_basis,
    rank,
    to_rational,
    vstack,
)


@dataclass(frozen=True)
class GLVSystem:
    B: RatMatrix
    A: RatMatrix
    lam: RatMatrix
    name: str = field(default="", compare=False)

    def __post_init__(self):
        m, n = self.B.shape
        if n < 1:
            raise InvalidSystem("system needs at least one variable")
        if self.A.shape != (n, m):
            raise DimensionMismatch(f"A must be {n}x{m}, got {self.A.rows}x{self.A.cols}")
        if self.lam.shape != (n, 1):
            raise DimensionMismatch(f"lambda must have {n} entries")
        if m < n:
            raise InvalidSystem(f"need m >= n, got m={m}, n={n}")
        if rank(self.B) != n:
            raise InvalidSystem("B not maximal rank")

    @classmethod
    def from_lists(cls, B, A, lam, name: str = "") -> GLVSystem:
        return cls(RatMatrix(B), RatMatrix(A), RatMatrix.column(lam), name)

    @property
    def n(self) -> int:
        return self.B.cols

    @property
    def m(self) -> int:
        return self.B.rows

    @cached_property
    def M(self) -> RatMatrix:
        return hstack(self.lam, self.A)

    @cached_property
    def _floats(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.B.to_numpy(), self.A.to_numpy(), self.lam.to_numpy()[:, 0]

    def log_velocity(self, u: np.ndarray) -> np.ndarray:
        """d(ln x)/dt at ``u = ln x``."""
        B, A, lam = self._floats
        return lam + A @ np.exp(B @ u)

    def __str__(self) -> str:
        return f"GLVSystem({self.name or 'unnamed'}: n={self.n}, m={self.m})"


@dataclass(frozen=True)
class ClassSignature:
    r: int
    n: int
    m: int
    BM: RatMatrix


@dataclass(frozen=True)
class EmbeddingSpec:
    """Parameters of a p-embedding.

    ``Bstar=None`` completes B with identity columns; ``Lstar=None`` pads
    the factorization's L with zeros.
    """

    p: int
    alpha: tuple = ()
    Bstar: RatMatrix | None = None
    Lstar: tuple | None = None

    def __post_init__(self):
        alpha = tuple(to_rational(a) for a in self.alpha) if self.alpha else (Fraction(1),) * self.p
        object.__setattr__(self, "alpha", alpha)
        if self.p < 1:
            raise ValueError("embedding needs p >= 1")
        if len(alpha) != self.p:
            raise DimensionMismatch(f"expected {self.p} alpha values, got {len(alpha)}")
        if any(a <= 0 for a in alpha):
            raise DomainError("initial conditions of embedded variables must be positive")
        if self.Lstar is not None:
            object.__setattr__(self, "Lstar", tuple(to_rational(v) for v in self.Lstar))
            if len(self.Lstar) != self.p:
                raise DimensionMismatch("Lstar must have p entries")


def _check_positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("state must lie in the open positive orthant")
    return x


def eval_vector_field(sys: GLVSystem, x) -> np.ndarray:
    """Right-hand side at a positive point; quasimonomials via exp(B ln x)."""
    x = _check_positive(x)
    if x.shape != (sys.n,):
        raise DimensionMismatch(f"expected {sys.n} coordinates")
    return x * sys.log_velocity(np.log(x))


def quasimonomials_exact(B: RatMatrix, x: Sequence[Fraction]) -> list[Fraction]:
    """prod_k x_k ** B_jk for each row j; exact, so B must be integral."""
    out = []
    for j in range(B.rows):
        q = Fraction(1)
        for k, e in enumerate(B.row(j)):
            if e.denominator != 1:
                raise ValueError("exact quasimonomials need integer exponents")
            if e:
                q *= x[k] ** int(e)
        out.append(q)
    return out


def eval_vector_field_exact(sys: GLVSystem, x: Sequence) -> list[Fraction]:
    x = [to_rational(v) for v in x]
    if any(v <= 0 for v in x):
        raise DomainError("state must lie in the open positive orthant")
    q = quasimonomials_exact(sys.B, x)
    return [x[i] * (sys.lam[i, 0] + sum(a * qj for a, qj in zip(sys.A.row(i), q)))
            for i in range(sys.n)]


def class_signature(sys: GLVSystem) -> ClassSignature:
    return ClassSignature(rank(sys.M), sys.n, sys.m, sys.B @ sys.M)


def apply_qmt(sys: GLVSystem, C: RatMatrix) -> GLVSystem:
    """Rewrite the system in variables y with x_i = prod_k y_k ** C_ik."""
    if C.shape != (sys.n, sys.n):
        raise DimensionMismatch(f"QMT matrix must be {sys.n}x{sys.n}")
    Ci = invert(C)
    return GLVSystem(sys.B @ C, Ci @ sys.A, Ci @ sys.lam, sys.name)


def rational_power(base: Fraction, exponent: Fraction) -> Fraction:
    """base ** exponent when the result is rational, else DomainError."""
    base, exponent = to_rational(base), to_rational(exponent)
    if exponent.denominator == 1:
        return base ** int(exponent)
    q = exponent.denominator
    num, den = _exact_root(base.numerator, q), _exact_root(base.denominator, q)
    if num is None or den is None:
        raise DomainError(f"{base}^{exponent} is not rational")
    return Fraction(num, den) ** exponent.numerator


def _exact_root(v: int, q: int) -> int | None:
    r = round(v ** (1.0 / q))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** q == v:
            return c
    return None


def embedding_scale(Bstar: RatMatrix, alpha: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Diagonal of E: e_j = 1 / prod_k alpha_k ** Bstar_jk."""
    out = []
    for j in range(Bstar.rows):
        prod = Fraction(1)
        for a, e in zip(alpha, Bstar.row(j)):
            if e:
                prod *= rational_power(a, e)
        out.append(1 / prod)
    return tuple(out)


def resolve_bstar(sys: GLVSystem, spec: EmbeddingSpec) -> RatMatrix:
    if spec.p > sys.m - sys.n:
        raise CannotComplete(f"p={spec.p} exceeds m - n = {sys.m - sys.n}")
    if spec.Bstar is None:
        return complete_to_full_rank(sys.B, spec.p)
    if spec.Bstar.shape != (sys.m, spec.p):
        raise DimensionMismatch(f"Bstar must be {sys.m}x{spec.p}")
    if rank(hstack(sys.B, spec.Bstar)) != sys.n + spec.p:
        raise CannotComplete("(B | Bstar) is not of maximal rank")
    return spec.Bstar


def _scale_columns(A: RatMatrix, scale: Sequence[Fraction]) -> RatMatrix:
    return RatMatrix([[a * s for a, s in zip(A.row(i), scale)] for i in range(A.rows)], cols=A.cols)


def embed(sys: GLVSystem, spec: EmbeddingSpec) -> GLVSystem:
    """Append ``spec.p`` frozen variables with initial values ``spec.alpha``."""
    Bstar = resolve_bstar(sys, spec)
    E = embedding_scale(Bstar, spec.alpha)
    p = spec.p
    return GLVSystem(
        hstack(sys.B, Bstar),
        vstack(_scale_columns(sys.A, E), RatMatrix.zeros(p, sys.m)),
        vstack(sys.lam, RatMatrix.zeros(p, 1)),
        f"{sys.name} [embedded p={p}]" if sys.name else "",
    )


def decouple(sys: GLVSystem, p: int, alpha: Sequence | None = None) -> GLVSystem:
    """Restrict a system whose last ``p`` rows of M vanish to its first n - p variables."""
    if p == 0:
        return sys
    if not 0 < p < sys.n:
        raise ValueError(f"p must lie in 1..{sys.n - 1}")
    alpha = tuple(to_rational(a) for a in alpha) if alpha else (Fraction(1),) * p
    if len(alpha) != p:
        raise DimensionMismatch(f"expected {p} alpha values")
    if any(a <= 0 for a in alpha):
        raise DomainError("alpha must be positive")
    n = sys.n - p
    if not trailing_rows_zero(sys.M, p):
        raise NotDecoupledForm(f"last {p} rows of M are not zero; apply prepare_decoupling first")
    Bbar = sys.B.submatrix(range(sys.m), range(n))
    Bprime = sys.B.submatrix(range(sys.m), range(n, sys.n))
    Einv = [1 / e for e in embedding_scale(Bprime, alpha)]
    Abar = sys.A.submatrix(range(n), range(sys.m))
    label = ", ".join(str(a) for a in alpha)
    return GLVSystem(
        Bbar,
        _scale_columns(Abar, Einv),
        sys.lam.submatrix(range(n), [0]),
        f"{sys.name} [decoupled p={p} alpha=({label})]",
    )


def isolating_qmt(kernel_vectors: Sequence[Sequence], n: int) -> RatMatrix:
    """C whose inverse has ``kernel_vectors`` as its last rows.

    The leading rows of C^-1 are identity rows chosen greedily so the
    result is invertible.
    """
    if not kernel_vectors:
        return RatMatrix.identity(n)
    top = complete_rows(kernel_vectors, n)
    Cinv = vstack(from_rows(top, n), from_rows(kernel_vectors, n))
    return invert(Cinv)


def prepare_decoupling(sys: GLVSystem, p: int) -> RatMatrix:
    """A QMT after which the last p rows of M are zero."""
    kernel = left_kernel_basis(sys.M)
    if p > len(kernel):
        raise InsufficientDegeneracy(f"p={p} exceeds n - rank(M) = {len(kernel)}")
    if trailing_rows_zero(sys.M, p):
        return RatMatrix.identity(sys.n)
    return isolating_qmt(kernel[:p], sys.n)


def trailing_rows_zero(M: RatMatrix, p: int) -> bool:
    return not any(M[i, j] for i in range(M.rows - p, M.rows) for j in range(M.cols))


def quasimonomial_invariants(sys: GLVSystem) -> list[tuple[int, ...]]:
    """Exponent vectors N with prod_j x_j ** N_j conserved (basis of the left kernel of M)."""
    return left_kernel_basis(sys.M)


def lv_representative(sys: GLVSystem) -> tuple[GLVSystem, RatMatrix]:
    """An LV system (B = I) in the class of ``sys`` or of its (m - n)-embedding.

    The returned C acts on ``sys`` when m = n and on the embedded system
    otherwise.
    """
    if sys.m > sys.n:
        sys = embed(sys, EmbeddingSpec(sys.m - sys.n))
    C = invert(sys.B)
    return apply_qmt(sys, C), C
