"""Global reduction of GLVP systems to Darboux canonical form.

Three routes reach a constant structure matrix ``S(r, n - r)``:

* general: a QMT congruence K -> S, then y = ln x;
* decoupling: first drop the n - r Casimir directions, then the general
  route on the symplectic remainder (result is r-dimensional);
* linear: y = ln x first (structure becomes the constant K), then a
  linear map w = P y with P K P^T = S.

Every route records the transformations it applied as a chain of steps so
states can be pushed into Darboux coordinates and pulled back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import InvalidFactorization
from .glv import GLVSystem, apply_qmt, embedding_scale
from .poisson import LOG_CHART, GLVPFactorization, HamiltonianExpr, decouple_factorization, hamiltonian, transform_factorization, verify_factorization
from .ratmat import RatMatrix, canonical_skew, format_rational, invert, rank, skew_congruence_canonicalize, to_rational


def _matrix_json(M: RatMatrix) -> list[list]:
    return [[format_rational(v) for v in M.row(i)] for i in range(M.rows)]


@dataclass(frozen=True)
class QMTStep:
    """Old variables x to new variables y with x_i = prod_k y_k ** C_ik."""

    C: RatMatrix

    @cached_property
    def _mats(self):
        return self.C.to_numpy(), invert(self.C).to_numpy()

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self._mats[1] @ np.log(x))

    def inverse(self, y: np.ndarray) -> np.ndarray:
        return np.exp(self._mats[0] @ np.log(y))

    def to_dict(self) -> dict:
        return {"step": "qmt", "C": _matrix_json(self.C)}


@dataclass(frozen=True)
class LogStep:
    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.log(x)

    def inverse(self, y: np.ndarray) -> np.ndarray:
        return np.exp(y)

    def to_dict(self) -> dict:
        return {"step": "log"}


@dataclass(frozen=True)
class LinearStep:
    """w = P y."""

    P: RatMatrix

    @cached_property
    def _mats(self):
        return self.P.to_numpy(), invert(self.P).to_numpy()

    def forward(self, y: np.ndarray) -> np.ndarray:
        return self._mats[0] @ y

    def inverse(self, w: np.ndarray) -> np.ndarray:
        return self._mats[1] @ w

    def to_dict(self) -> dict:
        return {"step": "linear", "P": _matrix_json(self.P)}


@dataclass(frozen=True)
class DecoupleStep:
    """Drop the trailing p variables, which sit on the leaf x = alpha.

    ``forward`` does not check that the state lies on that leaf.
    """

    p: int
    alpha: tuple

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x[:-self.p]

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([x, [float(a) for a in self.alpha]])

    def to_dict(self) -> dict:
        return {"step": "decouple", "p": self.p, "alpha": [format_rational(a) for a in self.alpha]}


@dataclass(frozen=True)
class DarbouxSystem:
    n: int
    r: int
    J: RatMatrix
    H: HamiltonianExpr
    chain: tuple
    source_n: int
    method: str = field(default="general", compare=False)

    def to_darboux(self, x) -> np.ndarray:
        """Push a positive-orthant state of the source system through the chain."""
        s = np.asarray(x, dtype=float)
        for step in self.chain:
            s = step.forward(s)
        return s

    def from_darboux(self, y) -> np.ndarray:
        s = np.asarray(y, dtype=float)
        for step in reversed(self.chain):
            s = step.inverse(s)
        return s

    @property
    def full_J(self) -> RatMatrix:
        """J padded with the decoupled (trivial Casimir) directions: S(r, source_n - r)."""
        if self.n == self.source_n:
            return self.J
        pad = self.source_n - self.n
        rows = [list(self.J.row(i)) + [0] * pad for i in range(self.n)] + [[0] * self.source_n] * pad
        return RatMatrix(rows, cols=self.source_n)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "r": self.r,
            "J": [[int(v) for v in self.J.row(i)] for i in range(self.n)],
            "H": self.H.to_dict(),
            "chain": [s.to_dict() for s in self.chain],
        }


def _require(sys: GLVSystem, f: GLVPFactorization) -> None:
    if not verify_factorization(sys, f):
        raise InvalidFactorization("factorization does not certify this system")


def darboux_general(sys: GLVSystem, f: GLVPFactorization) -> DarbouxSystem:
    _require(sys, f)
    P, r = skew_congruence_canonicalize(f.K)
    C = invert(P)
    moved = apply_qmt(sys, C)
    fm = transform_factorization(f, C)
    assert fm.K == canonical_skew(r, sys.n)
    H = hamiltonian(moved, fm).to_log_chart()
    return DarbouxSystem(sys.n, r, fm.K, H, (QMTStep(C), LogStep()), sys.n, "general")


def darboux_via_linear(sys: GLVSystem, f: GLVPFactorization) -> DarbouxSystem:
    _require(sys, f)
    H0 = hamiltonian(sys, f).to_log_chart()
    P, r = skew_congruence_canonicalize(f.K)
    J = P @ f.K @ P.T
    H = H0.linear_substitution(invert(P))
    return DarbouxSystem(sys.n, r, J, H, (LogStep(), LinearStep(P)), sys.n, "linear")


def darboux_via_decoupling(sys: GLVSystem, f: GLVPFactorization, alpha=None) -> DarbouxSystem:
    """Maximal decoupling (Casimirs fixed at ``alpha``, default 1) followed by the general route.

    On the leaf, the reduced H equals the original one minus the constant
    sum of L'_k ln alpha_k over the dropped variables, which vanishes for
    alpha = 1.
    """
    _require(sys, f)
    p = sys.n - rank(f.K)
    if p == 0:
        d = darboux_general(sys, f)
        return DarbouxSystem(d.n, d.r, d.J, d.H, d.chain, d.source_n, "decoupling")
    alpha = tuple(to_rational(a) for a in alpha) if alpha else (Fraction(1),) * p
    if p == sys.n:
        # K = 0: every variable is a Casimir and nothing is left after decoupling;
        # H restricted to the leaf is the constant sum of D_jj prod alpha ** B_j
        E = embedding_scale(sys.B, alpha)
        H = HamiltonianExpr(LOG_CHART, tuple((d / e, ()) for d, e in zip(f.D, E)), ())
        chain = (QMTStep(RatMatrix.identity(sys.n)), DecoupleStep(p, alpha))
        return DarbouxSystem(0, 0, RatMatrix.zeros(0, 0), H, chain, sys.n, "decoupling")
    reduced, fr, C = decouple_factorization(sys, f, p, alpha)
    inner = darboux_general(reduced, fr)
    chain = (QMTStep(C), DecoupleStep(p, alpha)) + inner.chain
    return DarbouxSystem(inner.n, inner.r, inner.J, inner.H, chain, sys.n, "decoupling")


ROUTES = {
    "general": darboux_general,
    "decoupling": darboux_via_decoupling,
    "linear": darboux_via_linear,
}
