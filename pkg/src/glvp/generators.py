"""Seeded random instances for property checks."""

from __future__ import annotations

import random
from fractions import Fraction

from .glv import GLVSystem
from .poisson import GLVPFactorization
from .ratmat import RatMatrix, det, rank


def random_skew(rng: random.Random, n: int, spread: int = 3) -> RatMatrix:
    """Skew matrix of random rank: either generic entries or a sum of few rank-2 pieces."""
    if rng.random() < 0.5:
        e = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                v = rng.randint(-spread, spread)
                e[i][j], e[j][i] = v, -v
        return RatMatrix(e, cols=n)
    K = RatMatrix.zeros(n, n)
    for _ in range(rng.randint(0, n // 2)):
        u = RatMatrix.column([rng.randint(-2, 2) for _ in range(n)])
        v = RatMatrix.column([rng.randint(-2, 2) for _ in range(n)])
        K = K + u @ v.T - v @ u.T
    return K


def random_full_rank(rng: random.Random, m: int, n: int, lo: int = -2, hi: int = 2) -> RatMatrix:
    while True:
        B = RatMatrix([[rng.randint(lo, hi) for _ in range(n)] for _ in range(m)], cols=n)
        if rank(B) == n:
            return B


def random_invertible(rng: random.Random, n: int, lo: int = -1, hi: int = 1) -> RatMatrix:
    while True:
        C = RatMatrix([[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)], cols=n)
        if det(C) != 0:
            return C


def random_nonzero(rng: random.Random, spread: int = 3) -> Fraction:
    return Fraction(rng.choice([-1, 1]) * rng.randint(1, spread), rng.randint(1, 2))


def random_glvp(rng: random.Random, max_n: int = 6, max_m: int = 8, n: int | None = None,
                m: int | None = None) -> tuple[GLVSystem, GLVPFactorization]:
    """A GLVP system built from random (K, D, L, B) with integer B of full rank."""
    n = n or rng.randint(2, max_n)
    m = m or rng.randint(n, max(n, max_m))
    K = random_skew(rng, n)
    D = tuple(random_nonzero(rng) for _ in range(m))
    L = RatMatrix.column([rng.randint(-3, 3) for _ in range(n)])
    B = random_full_rank(rng, m, n)
    A = RatMatrix([[a * d for a, d in zip((K @ B.T).row(i), D)] for i in range(n)], cols=m)
    sys = GLVSystem(B, A, K @ L, f"random-glvp-{n}x{m}")
    return sys, GLVPFactorization(K, D, L)


def random_glv(rng: random.Random, max_n: int = 4, max_m: int = 5) -> GLVSystem:
    """A generic GLV system with small integer data (not necessarily Poisson)."""
    n = rng.randint(1, max_n)
    m = rng.randint(n, max(n, max_m))
    B = random_full_rank(rng, m, n, -1, 1)
    A = RatMatrix([[Fraction(rng.randint(-4, 4), 4) for _ in range(m)] for _ in range(n)], cols=m)
    lam = RatMatrix.column([Fraction(rng.randint(-4, 4), 4) for _ in range(n)])
    return GLVSystem(B, A, lam, f"random-glv-{n}x{m}")


def random_positive_point(rng: random.Random, n: int) -> list[Fraction]:
    return [Fraction(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(n)]
