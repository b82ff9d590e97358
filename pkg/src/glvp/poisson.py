"""Poisson (GLVP) structure of GLV systems.

A GLV system is GLVP when ``lambda = K L`` and ``A = K B^T D`` for a
skew-symmetric K and a nonsingular diagonal D.  It is then Poisson with
structure matrix ``J = X K X`` (X = diag(x)) and Hamiltonian

    H = sum_i D_ii prod_k x_k ** B_ik + sum_j L_j ln x_j.

Casimirs are ``sum_j N_j ln x_j`` for N in the kernel of K, and coincide
with the quasimonomial first integrals of the system.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from math import lcm
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, InsufficientDegeneracy, InvalidFactorization
from .glv import (
    EmbeddingSpec,
    GLVSystem,
    apply_qmt,
    decouple,
    embedding_scale,
    isolating_qmt,
    quasimonomials_exact,
    resolve_bstar,
    trailing_rows_zero,
)
from .ratmat import (
    RatMatrix,
    format_rational,
    invert,
    primitive_integer_vector,
    rank,
    right_kernel_basis,
    solve,
    to_rational,
    vstack,
)

POSITIVE_ORTHANT = "x"
LOG_CHART = "log"


@dataclass(frozen=True)
class GLVPFactorization:
    """The triple (K, D, L); D is stored as its diagonal."""

    K: RatMatrix
    D: tuple
    L: RatMatrix

    def __post_init__(self):
        object.__setattr__(self, "D", tuple(to_rational(d) for d in self.D))

    @classmethod
    def from_lists(cls, K, D, L) -> GLVPFactorization:
        return cls(RatMatrix(K), tuple(D), RatMatrix.column(L))

    @property
    def n(self) -> int:
        return self.K.rows


@dataclass(frozen=True)
class NotGLVP:
    """Diagnosis returned when no factorization was found."""

    reason: str
    detail: str = ""

    def __str__(self) -> str:
        return f"NotGLVP({self.reason}: {self.detail})" if self.detail else f"NotGLVP({self.reason})"


@dataclass(frozen=True)
class HamiltonianExpr:
    """Quasimonomial/exponential terms plus logarithmic/linear terms.

    In the positive-orthant chart ``H(x) = sum c prod x**e + sum L_j ln x_j``;
    in the log chart ``H(y) = sum c exp(<e, y>) + <L, y>``.
    """

    chart: str
    terms: tuple
    linear: tuple

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = len(self.linear)
        coef = np.array([float(c) for c, _ in self.terms], dtype=float)
        exps = np.array([[float(v) for v in e] for _, e in self.terms], dtype=float).reshape(len(self.terms), n)
        lin = np.array([float(v) for v in self.linear], dtype=float)
        return coef, exps, lin

    @property
    def n(self) -> int:
        return len(self.linear)

    def _logs(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if self.chart == POSITIVE_ORTHANT:
            if np.any(~(point > 0)):
                raise DomainError("H is defined on the open positive orthant")
            return np.log(point)
        return point

    def value(self, point) -> float:
        coef, exps, lin = self._arrays
        u = self._logs(point)
        return float(coef @ np.exp(exps @ u) + lin @ u)

    def gradient(self, point) -> np.ndarray:
        coef, exps, lin = self._arrays
        u = self._logs(point)
        g = (coef * np.exp(exps @ u)) @ exps + lin
        if self.chart == POSITIVE_ORTHANT:
            g = g / np.asarray(point, dtype=float)
        return g

    def gradient_exact(self, x: Sequence) -> list[Fraction]:
        """Exact gradient in the positive-orthant chart (integer exponents only)."""
        if self.chart != POSITIVE_ORTHANT:
            raise ValueError("exact gradients exist only in the positive-orthant chart")
        x = [to_rational(v) for v in x]
        E = RatMatrix([e for _, e in self.terms], cols=self.n)
        q = quasimonomials_exact(E, x)
        grad = []
        for j in range(self.n):
            s = self.linear[j]
            for (c, e), qi in zip(self.terms, q):
                if e[j]:
                    s += c * e[j] * qi
            grad.append(s / x[j])
        return grad

    def to_log_chart(self) -> HamiltonianExpr:
        """Rewrite in y = ln x: monomials become exponentials, logs become linear."""
        if self.chart == LOG_CHART:
            return self
        return HamiltonianExpr(LOG_CHART, self.terms, self.linear)

    def linear_substitution(self, Q: RatMatrix) -> HamiltonianExpr:
        """H(Q w) for a log-chart H; exponent rows e -> e Q, linear part L -> Q^T L."""
        if self.chart != LOG_CHART:
            raise ValueError("linear substitution applies to the log chart")
        terms = tuple((c, (RatMatrix([e]) @ Q).row(0)) for c, e in self.terms)
        linear = (Q.T @ RatMatrix.column(self.linear)).col(0)
        return HamiltonianExpr(LOG_CHART, terms, linear)

    def to_dict(self) -> dict:
        return {
            "chart": self.chart,
            "terms": [{"coefficient": format_rational(c), "exponents": [format_rational(v) for v in e]}
                      for c, e in self.terms],
            "linear": [format_rational(v) for v in self.linear],
        }

    def __str__(self) -> str:
        var = "x" if self.chart == POSITIVE_ORTHANT else "y"
        parts = []
        for c, e in self.terms:
            if self.chart == POSITIVE_ORTHANT:
                mono = "*".join(f"{var}{k + 1}^{v}" if v != 1 else f"{var}{k + 1}" for k, v in enumerate(e) if v)
            else:
                mono = "exp(" + " + ".join(f"{v}*{var}{k + 1}" for k, v in enumerate(e) if v) + ")"
            parts.append(f"{c}*{mono or '1'}")
        for j, v in enumerate(self.linear):
            if v:
                parts.append(f"{v}*ln({var}{j + 1})" if self.chart == POSITIVE_ORTHANT else f"{v}*{var}{j + 1}")
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class Casimir:
    """phi_N = sum_j N_j ln x_j (or <N, y> in the log chart)."""

    N: tuple
    chart: str = POSITIVE_ORTHANT

    def value(self, point) -> float:
        point = np.asarray(point, dtype=float)
        if self.chart == POSITIVE_ORTHANT:
            if np.any(~(point > 0)):
                raise DomainError("Casimir is defined on the open positive orthant")
            point = np.log(point)
        return float(np.dot(np.asarray(self.N, dtype=float), point))

    def gradient_exact(self, x: Sequence) -> list[Fraction]:
        return [Fraction(int(v)) / to_rational(xj) for v, xj in zip(self.N, x)]

    def __str__(self) -> str:
        return "prod x^(" + ",".join(str(v) for v in self.N) + ")"


def _check_dims(sys: GLVSystem, f: GLVPFactorization) -> None:
    if f.K.shape != (sys.n, sys.n) or len(f.D) != sys.m or f.L.shape != (sys.n, 1):
        raise DimensionMismatch(
            f"factorization shapes K{f.K.shape}, D[{len(f.D)}], L{f.L.shape} do not fit n={sys.n}, m={sys.m}")


def _times_diag(A: RatMatrix, d: Sequence[Fraction]) -> RatMatrix:
    return RatMatrix([[a * s for a, s in zip(A.row(i), d)] for i in range(A.rows)], cols=A.cols)


def verify_factorization(sys: GLVSystem, f: GLVPFactorization) -> bool:
    """Exact check of K skew, D_ii != 0, lambda = K L and A = K B^T D."""
    _check_dims(sys, f)
    if not f.K.is_skew_symmetric():
        return False
    if any(d == 0 for d in f.D):
        return False
    if f.K @ f.L != sys.lam:
        return False
    return _times_diag(f.K @ sys.B.T, f.D) == sys.A


def _right_inverse_of_bt(B: RatMatrix) -> RatMatrix:
    """G (m x n) with B^T G = I, supported on the first independent rows of B."""
    m, n = B.shape
    rows: list[int] = []
    for i in range(m):
        if rank(B.submatrix(rows + [i], range(n))) > len(rows):
            rows.append(i)
        if len(rows) == n:
            break
    inv = invert(B.submatrix(rows, range(n)).T)
    G = [[Fraction(0)] * n for _ in range(m)]
    for a, i in enumerate(rows):
        G[i] = list(inv.row(a))
    return RatMatrix(G, cols=n)


def _nonvanishing_combination(basis: list[tuple[int, ...]]) -> tuple[Fraction, ...] | None:
    """An element of span(basis) with every coordinate nonzero, if one exists."""
    if not basis:
        return None
    m = len(basis[0])
    if any(all(b[j] == 0 for b in basis) for j in range(m)):
        return None
    candidates = itertools.chain(
        basis,
        (tuple(x + y for x, y in zip(a, b)) for a, b in itertools.combinations(basis, 2)),
        # moment curve: each coordinate is a nonzero polynomial in t of degree < len(basis),
        # so one of the first m * (len(basis) - 1) + 1 values of t must succeed
        (tuple(sum(b[j] * t ** i for i, b in enumerate(basis)) for j in range(m))
         for t in range(1, m * len(basis) + 2)),
    )
    for u in candidates:
        if all(u):
            return tuple(Fraction(v) for v in u)
    return None  # unreachable by the degree argument above


def solve_factorization(sys: GLVSystem) -> GLVPFactorization | NotGLVP:
    """Find (K, D, L) certifying GLVP structure, or explain why none exists.

    With u_j = 1/D_jj the requirement ``A diag(u) = K B^T`` for skew K is
    linear in u: every row of ``A diag(u)`` must lie in the row space of
    ``B^T`` and the unique K solving it must be skew.  The kernel of that
    homogeneous system is searched for a vector without zero entries.
    """
    n, m = sys.n, sys.m
    rA, rM = rank(sys.A), rank(sys.M)
    if rA != rM or rA % 2:
        return NotGLVP("rank obstruction", f"rank A = {rA}, rank M = {rM}; both must agree and be even")

    A = sys.A
    G = _right_inverse_of_bt(sys.B)
    Nb = right_kernel_basis(sys.B.T)
    equations: list[list[Fraction]] = []
    for i in range(n):
        for N in Nb:
            equations.append([A[i, j] * N[j] for j in range(m)])
    for i in range(n):
        for k in range(i, n):
            equations.append([A[i, j] * G[j, k] + A[k, j] * G[j, i] for j in range(m)])
    system = RatMatrix(equations, cols=m) if equations else RatMatrix.zeros(0, m)
    u_basis = right_kernel_basis(system)
    u = _nonvanishing_combination(u_basis)
    if u is None:
        return NotGLVP("no nonvanishing D",
                       f"solution space of dimension {len(u_basis)} forces some D_jj^-1 = 0")

    D = primitive_integer_vector([1 / v for v in u])
    D = tuple(Fraction(d) for d in D)
    K = _times_diag(A, [1 / d for d in D]) @ G
    L = solve(K, sys.lam)
    if L is None:
        return NotGLVP("lambda not in image of K")
    f = GLVPFactorization(K, D, L)
    assert verify_factorization(sys, f)
    return f


def hamiltonian(sys: GLVSystem, f: GLVPFactorization) -> HamiltonianExpr:
    if not verify_factorization(sys, f):
        raise InvalidFactorization("factorization does not certify this system")
    terms = tuple((f.D[i], sys.B.row(i)) for i in range(sys.m))
    return HamiltonianExpr(POSITIVE_ORTHANT, terms, f.L.col(0))


def structure_matrix(f: GLVPFactorization, x) -> np.ndarray:
    """J = X K X at a positive point."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("structure matrix is defined on the open positive orthant")
    return x[:, None] * f.K.to_numpy() * x[None, :]


JACOBI_GRID = tuple(Fraction(v) for v in ("1/3", "1/2", "1", "2", "3"))


def jacobi_samples(n: int, count: int = 10, seed: int = 0) -> list[tuple[Fraction, ...]]:
    rng = random.Random(seed)
    return [tuple(rng.choice(JACOBI_GRID) for _ in range(n)) for _ in range(count)]


def check_jacobi(f: GLVPFactorization | RatMatrix, samples: Sequence[Sequence] | None = None,
                 seed: int = 0) -> Fraction:
    """Largest |Jacobi expression| of J = X K X over all (i, j, k) and samples, exactly.

    The residual is homogeneous of degree 3 in x and 2 in K, so the sum is
    evaluated over integers after clearing denominators and rescaled once.
    """
    K = f.K if isinstance(f, GLVPFactorization) else f
    n = K.rows
    if samples is None:
        samples = jacobi_samples(n, seed=seed)
    kden = reduce(lcm, (v.denominator for v in K.flat()), 1)
    Ki = [[int(K[i, j] * kden) for j in range(n)] for i in range(n)]
    worst = Fraction(0)
    for point in samples:
        x = [to_rational(v) for v in point]
        if len(x) != n:
            raise DimensionMismatch("sample point has wrong dimension")
        d = reduce(lcm, (v.denominator for v in x), 1)
        a = [int(v * d) for v in x]
        J = [[a[i] * Ki[i][j] * a[j] for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    s = (J[j][i] * Ki[j][k] * a[k] + J[k][i] * a[j] * Ki[j][k]
                         + J[k][j] * Ki[k][i] * a[i] + J[i][j] * a[k] * Ki[k][i]
                         + J[i][k] * Ki[i][j] * a[j] + J[j][k] * a[i] * Ki[i][j])
                    if s:
                        worst = max(worst, Fraction(abs(s), d ** 3 * kden ** 2))
    return worst


def casimirs(f: GLVPFactorization) -> list[Casimir]:
    return [Casimir(N) for N in right_kernel_basis(f.K)]


def transform_factorization(f: GLVPFactorization, C: RatMatrix) -> GLVPFactorization:
    """K' = C^-1 K C^-T, L' = C^T L, D' = D."""
    Ci = invert(C)
    return GLVPFactorization(Ci @ f.K @ Ci.T, f.D, C.T @ f.L)


def embed_factorization(sys: GLVSystem, f: GLVPFactorization, spec: EmbeddingSpec) -> GLVPFactorization:
    """Factorization of ``embed(sys, spec)``: K padded with zeros, L extended, D scaled by E."""
    _check_dims(sys, f)
    Bstar = resolve_bstar(sys, spec)
    E = embedding_scale(Bstar, spec.alpha)
    n, p = sys.n, spec.p
    K = RatMatrix([list(f.K.row(i)) + [0] * p for i in range(n)] + [[0] * (n + p) for _ in range(p)],
                  cols=n + p)
    Lstar = spec.Lstar if spec.Lstar is not None else (0,) * p
    return GLVPFactorization(K, tuple(d * e for d, e in zip(f.D, E)), vstack(f.L, RatMatrix.column(Lstar)))


def decouple_factorization(sys: GLVSystem, f: GLVPFactorization, p: int, alpha: Sequence | None = None
                           ) -> tuple[GLVSystem, GLVPFactorization, RatMatrix]:
    """Drop p Casimir directions; returns the reduced system, its factorization and the QMT used."""
    _check_dims(sys, f)
    kernel = right_kernel_basis(f.K)
    if p > len(kernel):
        raise InsufficientDegeneracy(f"p={p} exceeds n - rank(K) = {len(kernel)}")
    # already decoupled (e.g. freshly embedded): keep the variables as they are
    C = RatMatrix.identity(sys.n) if trailing_rows_zero(f.K, p) else isolating_qmt(kernel[:p], sys.n)
    if p == 0:
        return sys, f, C
    alpha = tuple(to_rational(a) for a in alpha) if alpha else (Fraction(1),) * p
    moved = apply_qmt(sys, C)
    fm = transform_factorization(f, C)
    reduced = decouple(moved, p, alpha)
    n = sys.n - p
    Bprime = moved.B.submatrix(range(sys.m), range(n, sys.n))
    E = embedding_scale(Bprime, alpha)
    fr = GLVPFactorization(
        fm.K.submatrix(range(n), range(n)),
        tuple(d / e for d, e in zip(fm.D, E)),
        fm.L.submatrix(range(n), [0]),
    )
    return reduced, fr, C
