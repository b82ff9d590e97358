import random

import numpy as np
import pytest

from glvp.darboux import ROUTES, LinearStep, LogStep, QMTStep, darboux_general, darboux_via_decoupling, darboux_via_linear
from glvp.dynamics import conservation_report, integrate_darboux, integrate_glv
from glvp.errors import BlowUp, InvalidFactorization, StepUnderflow
from glvp.generators import random_glvp
from glvp.glv import GLVSystem
from glvp.poisson import GLVPFactorization, HamiltonianExpr, hamiltonian, LOG_CHART
from glvp.ratmat import RatMatrix, canonical_skew, rank

NUTKU = GLVSystem.from_lists(B=[[1, 0, 0], [0, 1, 0], [0, 0, 1]], A=[[0, -1, 1], [1, 0, 1], [1, 1, 0]],
                             lam=[1, 2, 1])
NUTKU_F = GLVPFactorization.from_lists([[0, -1, -1], [1, 0, -1], [1, 1, 0]], [1, 1, -1], [0, 1, -2])

# Closed-form Darboux Hamiltonians of the three-parameter family, taken at a=b=1, c=-1, rho=1, mu=2:
#   three variables: ab e^{c y1} + e^{y2} - a e^{y1 + b y2 - y3} - mu y1 + (rho/c) y2 + mu y3
#   after decoupling: the same with the y3 terms removed
REFERENCE_3D = HamiltonianExpr(LOG_CHART, ((1, (-1, 0, 0)), (1, (0, 1, 0)), (-1, (1, 1, -1))), (-2, -1, 2))
REFERENCE_2D = HamiltonianExpr(LOG_CHART, ((1, (-1, 0)), (1, (0, 1)), (-1, (1, 1))), (-2, -1))


def _negated(H):
    """H(-y) as an expression."""
    return H.linear_substitution(RatMatrix.diag([-1] * H.n))


def _same_expr(H1, H2):
    return sorted(H1.terms) == sorted(H2.terms) and tuple(H1.linear) == tuple(H2.linear)


def test_general_route_on_worked_example():
    d = darboux_general(NUTKU, NUTKU_F)
    assert d.J == canonical_skew(2, 3)
    assert len(d.H.terms) == 3 and sum(1 for v in d.H.linear if v) == 3
    # our C differs from the reference one by y -> -y, a symplectic reflection
    assert _same_expr(_negated(d.H), REFERENCE_3D)


def test_general_route_matches_reference_dynamics():
    d = darboux_general(NUTKU, NUTKU_F)
    y0 = d.to_darboux([1.0, 0.5, 2.0])
    reference = type(d)(3, 2, canonical_skew(2, 3), REFERENCE_3D, (), 3)
    ours = integrate_darboux(d, y0, 0.3, 1e-11)
    theirs = integrate_darboux(reference, -y0, 0.3, 1e-11)
    grid = np.linspace(0, 0.3, 201)
    assert np.allclose(ours.at(grid), -theirs.at(grid), rtol=1e-8, atol=1e-10)


def test_decoupling_route_on_worked_example():
    d = darboux_via_decoupling(NUTKU, NUTKU_F)
    assert d.n == d.r == 2
    assert d.J == canonical_skew(2, 2)
    assert d.full_J == canonical_skew(2, 3)
    assert _same_expr(_negated(d.H), REFERENCE_2D)


def test_linear_route_and_route_agreement():
    Js = {name: route(NUTKU, NUTKU_F).full_J for name, route in ROUTES.items()}
    assert len(set(Js.values())) == 1
    d = darboux_via_linear(NUTKU, NUTKU_F)
    assert isinstance(d.chain[0], LogStep) and isinstance(d.chain[1], LinearStep)


def test_canonical_input_gives_trivial_steps():
    sys = GLVSystem.from_lists(B=[[1, 0], [0, 1], [1, 1]], A=[[0, 1, 2], [-3, 0, -2]], lam=[1, 1])
    f = GLVPFactorization.from_lists([[0, 1], [-1, 0]], [3, 1, 2], [-1, 1])
    assert f.K == canonical_skew(2, 2)
    d = darboux_general(sys, f)
    assert isinstance(d.chain[0], QMTStep) and d.chain[0].C == RatMatrix.identity(2)
    assert isinstance(d.chain[1], LogStep)
    assert d.chain[0].C == RatMatrix.identity(2)
    lin = darboux_via_linear(sys, f)
    assert lin.chain[1].P == RatMatrix.identity(2)
    dec = darboux_via_decoupling(sys, f)
    assert dec.J == d.J and _same_expr(dec.H, d.H)


def test_zero_rank_gives_frozen_flow():
    sys = GLVSystem.from_lists(B=[[1, 0], [0, 1]], A=[[0, 0], [0, 0]], lam=[0, 0])
    f = GLVPFactorization.from_lists([[0, 0], [0, 0]], [1, 1], [0, 0])
    d = darboux_general(sys, f)
    assert d.r == 0 and d.J.is_zero()
    traj = integrate_darboux(d, d.to_darboux([2.0, 3.0]), 5.0)
    assert np.all(traj.states == traj.states[0])
    dec = darboux_via_decoupling(sys, f)
    assert dec.n == 0 and dec.full_J == RatMatrix.zeros(2, 2)
    assert dec.H.value(dec.to_darboux([1.0, 1.0])) == hamiltonian(sys, f).value([1.0, 1.0])


def test_routes_reject_bad_factorization():
    bad = GLVPFactorization(NUTKU_F.K, NUTKU_F.D, RatMatrix.column([0, 0, 0]))
    for route in ROUTES.values():
        with pytest.raises(InvalidFactorization):
            route(NUTKU, bad)


def test_hamiltonian_preserved_through_chain_random():
    rng = random.Random(20)
    prng = np.random.default_rng(20)
    for _ in range(100):
        sys, f = random_glvp(rng, max_n=5, max_m=6)
        H0 = hamiltonian(sys, f)
        for name, route in ROUTES.items():
            d = route(sys, f)
            assert d.full_J == canonical_skew(rank(f.K), sys.n)
            assert d.n == (rank(f.K) if name == "decoupling" else sys.n)
            for _ in range(5):
                x = np.exp(prng.uniform(-0.7, 0.7, sys.n))
                if name == "decoupling":
                    x = d.from_darboux(d.to_darboux(x))
                a, b = H0.value(x), d.H.value(d.to_darboux(x))
                assert abs(a - b) <= 1e-12 * max(abs(a), 1.0) * 10


def test_pull_back_reproduces_orthant_trajectory():
    rng = random.Random(21)
    prng = np.random.default_rng(21)
    t_end, grid = 10.0, np.linspace(0, 10.0, 51)
    done = 0
    while done < 8:
        sys, f = random_glvp(rng, max_n=5, max_m=6)
        x0 = np.exp(prng.uniform(-0.5, 0.5, sys.n))
        routes = {name: route(sys, f) for name, route in ROUTES.items()}
        x0 = routes["decoupling"].from_darboux(routes["decoupling"].to_darboux(x0))
        try:
            ref = integrate_glv(sys, x0, t_end, 1e-11, grid)
            pulled = {}
            for name, d in routes.items():
                traj = integrate_darboux(d, d.to_darboux(x0), t_end, 1e-11, grid)
                pulled[name] = np.array([d.from_darboux(y) for y in traj.at(grid)])
        except (BlowUp, StepUnderflow):
            continue
        done += 1
        expected = ref.at(grid)
        H0 = hamiltonian(sys, f)
        for name, xs in pulled.items():
            assert np.max(np.abs(xs - expected) / expected) < 1e-6, name
            h = np.array([H0.value(x) for x in xs])
            assert np.max(np.abs(h - h[0])) < 1e-9 * max(abs(h[0]), 1.0), name


def test_darboux_chart_conservation():
    d = darboux_general(NUTKU, NUTKU_F)
    y0 = d.to_darboux([1.0, 0.5, 2.0])
    traj = integrate_darboux(d, y0, 0.4, 1e-9)
    assert conservation_report(traj, [d.H]).worst_relative < 1e-8
    assert np.all(traj.states[:, 2] == y0[2])
