"""Exact dense linear algebra over the rationals.

Every matrix in the GLV formalism is small (tens of rows at most), so a
dense row-major tuple of :class:`fractions.Fraction` is the storage.  The
module provides rank, kernels, inversion and the congruence reduction of a
skew-symmetric matrix to the block form ``diag(S_1, ..., S_{r/2}, 0, ..., 0)``
with ``S_i = [[0, 1], [-1, 0]]``.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from numbers import Integral
from typing import Iterable, Sequence

import numpy as np

from .errors import CannotComplete, DimensionMismatch, NotSkewSymmetric, SingularMatrix

Rational = Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)


def to_rational(value) -> Fraction:
    """Coerce ints, Fractions, floats (exact binary value) and "p/q" strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rational(q: Fraction) -> int | str:
    """Integers stay bare, everything else becomes "p/q"."""
    q = to_rational(q)
    if q.denominator == 1:
        return q.numerator
    return f"{q.numerator}/{q.denominator}"


class RatMatrix:
    """Immutable dense matrix of Fractions."""

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, data: Iterable[Iterable] = (), cols: int | None = None):
        rows = [tuple(to_rational(x) for x in r) for r in data]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise DimensionMismatch("ragged rows")
        self.rows = len(rows)
        self.cols = cols
        self._e = tuple(x for r in rows for x in r)

    @classmethod
    def _flat(cls, rows: int, cols: int, entries) -> RatMatrix:
        obj = cls.__new__(cls)
        obj.rows = rows
        obj.cols = cols
        obj._e = tuple(entries)
        return obj

    @classmethod
    def zeros(cls, rows: int, cols: int) -> RatMatrix:
        return cls._flat(rows, cols, (_ZERO,) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> RatMatrix:
        return cls._flat(n, n, (_ONE if i == j else _ZERO for i in range(n) for j in range(n)))

    @classmethod
    def diag(cls, values: Sequence) -> RatMatrix:
        vals = [to_rational(v) for v in values]
        n = len(vals)
        return cls._flat(n, n, (vals[i] if i == j else _ZERO for i in range(n) for j in range(n)))

    @classmethod
    def column(cls, values: Sequence) -> RatMatrix:
        vals = [to_rational(v) for v in values]
        return cls._flat(len(vals), 1, vals)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int) -> RatMatrix:
        cols = [[to_rational(x) for x in c] for c in columns]
        return cls._flat(rows, len(cols), (cols[j][i] for i in range(rows) for j in range(len(cols))))

    # -- access -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx: tuple[int, int]) -> Fraction:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(idx)
        return self._e[i * self.cols + j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self._e[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple[Fraction, ...]:
        return self._e[j::self.cols] if self.cols else ()

    def tolist(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def flat(self) -> tuple[Fraction, ...]:
        return self._e

    def submatrix(self, row_idx: Iterable[int], col_idx: Iterable[int]) -> RatMatrix:
        ri, ci = list(row_idx), list(col_idx)
        return RatMatrix._flat(len(ri), len(ci), (self[i, j] for i in ri for j in ci))

    def to_numpy(self) -> np.ndarray:
        return np.array([float(x) for x in self._e], dtype=float).reshape(self.rows, self.cols)

    # -- algebra ------------------------------------------------------------

    @property
    def T(self) -> RatMatrix:
        return RatMatrix._flat(self.cols, self.rows,
                               (self._e[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)))

    def __matmul__(self, other: RatMatrix) -> RatMatrix:
        if not isinstance(other, RatMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        ocols = [other.col(j) for j in range(other.cols)]
        out = []
        for i in range(self.rows):
            r = self.row(i)
            for c in ocols:
                s = _ZERO
                for a, b in zip(r, c):
                    if a and b:
                        s += a * b
                out.append(s)
        return RatMatrix._flat(self.rows, other.cols, out)

    def _check_same(self, other: RatMatrix) -> None:
        if self.shape != other.shape:
            raise DimensionMismatch(f"shape {self.shape} vs {other.shape}")

    def __add__(self, other: RatMatrix) -> RatMatrix:
        self._check_same(other)
        return RatMatrix._flat(self.rows, self.cols, (a + b for a, b in zip(self._e, other._e)))

    def __sub__(self, other: RatMatrix) -> RatMatrix:
        self._check_same(other)
        return RatMatrix._flat(self.rows, self.cols, (a - b for a, b in zip(self._e, other._e)))

    def __neg__(self) -> RatMatrix:
        return RatMatrix._flat(self.rows, self.cols, (-a for a in self._e))

    def __mul__(self, scalar) -> RatMatrix:
        if isinstance(scalar, RatMatrix):
            return NotImplemented
        s = to_rational(scalar)
        return RatMatrix._flat(self.rows, self.cols, (a * s for a in self._e))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatMatrix):
            return NotImplemented
        return self.shape == other.shape and self._e == other._e

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._e))

    def __repr__(self) -> str:
        body = ", ".join("[" + ", ".join(str(x) for x in self.row(i)) + "]" for i in range(self.rows))
        return f"RatMatrix({self.rows}x{self.cols}: [{body}])"

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_zero(self) -> bool:
        return not any(self._e)

    def is_skew_symmetric(self) -> bool:
        if not self.is_square():
            return False
        n = self.rows
        return all(self[i, j] == -self[j, i] for i in range(n) for j in range(i, n))


def hstack(*mats: RatMatrix) -> RatMatrix:
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise DimensionMismatch("hstack needs equal row counts")
    cols = sum(m.cols for m in mats)
    return RatMatrix._flat(rows, cols, (x for i in range(rows) for m in mats for x in m.row(i)))


def vstack(*mats: RatMatrix) -> RatMatrix:
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise DimensionMismatch("vstack needs equal column counts")
    return RatMatrix._flat(sum(m.rows for m in mats), cols, (x for m in mats for x in m.flat()))


def from_rows(vectors: Sequence[Sequence], cols: int) -> RatMatrix:
    """Stack row vectors; ``cols`` fixes the shape when ``vectors`` is empty."""
    return RatMatrix(vectors, cols=cols)


# -- elimination ----------------------------------------------------------


def _rref(rows: list[list[Fraction]], ncols: int) -> list[int]:
    """Reduce ``rows`` in place to reduced row echelon form; return pivot columns."""
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if rows[i][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pr = rows[r]
        inv = 1 / pr[c]
        if inv != 1:
            for k in range(c, ncols):
                if pr[k]:
                    pr[k] *= inv
        for i in range(nrows):
            if i != r:
                f = rows[i][c]
                if f:
                    ri = rows[i]
                    for k in range(c, ncols):
                        if pr[k]:
                            ri[k] -= f * pr[k]
        pivots.append(c)
        r += 1
    return pivots


def rref(M: RatMatrix) -> tuple[RatMatrix, list[int]]:
    rows = M.tolist()
    pivots = _rref(rows, M.cols)
    return RatMatrix(rows, cols=M.cols), pivots


def rank(M: RatMatrix) -> int:
    """Exact rank over Q."""
    if M.rows == 0 or M.cols == 0:
        return 0
    return len(_rref(M.tolist(), M.cols))


def primitive_integer_vector(v: Sequence) -> tuple[int, ...]:
    """Scale to coprime integers with the first nonzero entry positive."""
    q = [to_rational(x) for x in v]
    if not any(q):
        return tuple(0 for _ in q)
    den = reduce(lcm, (x.denominator for x in q), 1)
    ints = [int(x * den) for x in q]
    g = reduce(gcd, (abs(x) for x in ints if x), 0)
    ints = [x // g for x in ints]
    if next(x for x in ints if x) < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def right_kernel_basis(M: RatMatrix) -> list[tuple[int, ...]]:
    """Basis of {v : M v = 0}, one primitive integer vector per free column."""
    ncols = M.cols
    rows = M.tolist()
    pivots = _rref(rows, ncols) if M.rows else []
    pivset = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        v = [_ZERO] * ncols
        v[f] = _ONE
        for i, p in enumerate(pivots):
            v[p] = -rows[i][f]
        basis.append(primitive_integer_vector(v))
    return basis


def left_kernel_basis(M: RatMatrix) -> list[tuple[int, ...]]:
    """Basis of {w : w M = 0}, normalized like :func:`right_kernel_basis`."""
    return right_kernel_basis(M.T)


def solve(A: RatMatrix, b: RatMatrix) -> RatMatrix | None:
    """Particular solution of ``A x = b`` with free variables zero, or None if inconsistent."""
    if b.rows != A.rows or b.cols != 1:
        raise DimensionMismatch("right-hand side must be a column of matching height")
    rows = [list(A.row(i)) + [b[i, 0]] for i in range(A.rows)]
    pivots = _rref(rows, A.cols + 1)
    if pivots and pivots[-1] == A.cols:
        return None
    x = [_ZERO] * A.cols
    for i, p in enumerate(pivots):
        x[p] = rows[i][A.cols]
    return RatMatrix.column(x)


def det(C: RatMatrix) -> Fraction:
    if not C.is_square():
        raise DimensionMismatch("determinant of a non-square matrix")
    n = C.rows
    rows = C.tolist()
    d = _ONE
    for c in range(n):
        p = next((i for i in range(c, n) if rows[i][c]), None)
        if p is None:
            return _ZERO
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            d = -d
        piv = rows[c][c]
        d *= piv
        for i in range(c + 1, n):
            f = rows[i][c] / piv
            if f:
                for k in range(c, n):
                    rows[i][k] -= f * rows[c][k]
    return d


def invert(C: RatMatrix) -> RatMatrix:
    """Exact inverse; raises SingularMatrix when det(C) = 0."""
    if not C.is_square():
        raise DimensionMismatch("only square matrices are invertible")
    n = C.rows
    rows = [list(C.row(i)) + [_ONE if i == j else _ZERO for j in range(n)] for i in range(n)]
    pivots = _rref(rows, 2 * n)
    if pivots[:n] != list(range(n)):
        raise SingularMatrix("matrix is singular")
    return RatMatrix([r[n:] for r in rows], cols=n)


# -- skew-symmetric congruence ------------------------------------------


def canonical_skew(r: int, n: int) -> RatMatrix:
    """S(r, n-r): r/2 blocks [[0, 1], [-1, 0]] on the diagonal, then zeros."""
    if r % 2 or not 0 <= r <= n:
        raise ValueError(f"invalid symplectic rank {r} for size {n}")
    e = [[_ZERO] * n for _ in range(n)]
    for b in range(0, r, 2):
        e[b][b + 1] = _ONE
        e[b + 1][b] = -_ONE
    return RatMatrix(e, cols=n)


def skew_congruence_canonicalize(K: RatMatrix) -> tuple[RatMatrix, int]:
    """Find invertible P with ``P K P^T = S(r, n-r)``, r = rank(K).

    Symmetric elimination: the lexicographically first nonzero entry
    (i < j) of the unreduced block is swapped into position (k, k+1),
    row/column k+1 is scaled so that entry becomes 1, and the remaining
    rows and columns are cleared against the new block.
    """
    if not K.is_skew_symmetric():
        raise NotSkewSymmetric("K must satisfy K = -K^T")
    n = K.rows
    W = K.tolist()
    P = RatMatrix.identity(n).tolist()

    def swap(a: int, b: int) -> None:
        if a == b:
            return
        W[a], W[b] = W[b], W[a]
        for row in W:
            row[a], row[b] = row[b], row[a]
        P[a], P[b] = P[b], P[a]

    k = 0
    while k + 1 < n:
        hit = next(((i, j) for i in range(k, n) for j in range(i + 1, n) if W[i][j]), None)
        if hit is None:
            break
        i, j = hit
        swap(i, k)
        swap(j, k + 1)
        s = 1 / W[k][k + 1]
        W[k + 1] = [x * s for x in W[k + 1]]
        for row in W:
            row[k + 1] *= s
        P[k + 1] = [x * s for x in P[k + 1]]
        for l in range(k + 2, n):
            a, b = W[k + 1][l], -W[k][l]
            if not (a or b):
                continue
            W[l] = [x + a * y + b * z for x, y, z in zip(W[l], W[k], W[k + 1])]
            for row in W:
                row[l] += a * row[k] + b * row[k + 1]
            P[l] = [x + a * y + b * z for x, y, z in zip(P[l], P[k], P[k + 1])]
        k += 2
    Pm = RatMatrix(P, cols=n)
    assert Pm @ K @ Pm.T == canonical_skew(k, n)
    return Pm, k


def complete_to_full_rank(B: RatMatrix, p: int) -> RatMatrix:
    """Pick ``p`` identity columns (greedily, in index order) so (B | B*) has rank n + p."""
    m, n = B.shape
    if n + p > m:
        raise CannotComplete(f"cannot add {p} columns to an {m}x{n} matrix")
    chosen: list[int] = []
    current = rank(B)
    for j in range(m):
        if len(chosen) == p:
            break
        trial = hstack(B, _unit_columns(m, chosen + [j]))
        r = rank(trial)
        if r > current:
            chosen.append(j)
            current = r
    if len(chosen) < p or current != n + p:
        raise CannotComplete("B is not of maximal rank")
    return _unit_columns(m, chosen)


def _unit_columns(m: int, idx: Sequence[int]) -> RatMatrix:
    return RatMatrix._flat(m, len(idx), (_ONE if i == j else _ZERO for i in range(m) for j in idx))


def complete_rows(fixed: Sequence[Sequence], n: int) -> list[tuple]:
    """Identity rows (greedy, index order) that extend ``fixed`` to a basis of Q^n."""
    rows = [tuple(to_rational(x) for x in r) for r in fixed]
    current = rank(from_rows(rows, n)) if rows else 0
    if current != len(rows):
        raise SingularMatrix("rows to complete are linearly dependent")
    extra = []
    for i in range(n):
        if current == n:
            break
        e = tuple(_ONE if j == i else _ZERO for j in range(n))
        r = rank(from_rows(rows + extra + [e], n))
        if r > current:
            extra.append(e)
            current = r
    return extra
