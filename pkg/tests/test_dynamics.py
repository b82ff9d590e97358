import io
import math
import random

import numpy as np
import pytest

from glvp.darboux import darboux_general
from glvp.dynamics import (
    Trajectory,
    conservation_report,
    integrate_darboux,
    integrate_glv,
    map_trajectory,
    qmt_flow_residual,
)
from glvp.errors import BlowUp, ChartMismatch, SingularMatrix, StepUnderflow
from glvp.generators import random_glv, random_invertible
from glvp.glv import GLVSystem, apply_qmt
from glvp.poisson import Casimir, GLVPFactorization, HamiltonianExpr, casimirs, hamiltonian
from glvp.ratmat import RatMatrix

NUTKU = GLVSystem.from_lists(B=[[1, 0, 0], [0, 1, 0], [0, 0, 1]], A=[[0, -1, 1], [1, 0, 1], [1, 1, 0]],
                             lam=[1, 2, 1])
NUTKU_F = GLVPFactorization.from_lists([[0, -1, -1], [1, 0, -1], [1, 1, 0]], [1, 1, -1], [0, 1, -2])
NUTKU_X0 = (1.0, 0.5, 2.0)
# x2' and x3' are positive and quadratic, so the solution from NUTKU_X0 escapes in finite time;
# reference escape time from an independent DOP853 run at rtol = atol = 1e-12
NUTKU_ESCAPE_TIME = 0.435321209
LOGISTIC = GLVSystem.from_lists(B=[[1]], A=[[-1]], lam=[1])


def test_logistic_matches_closed_form():
    traj = integrate_glv(LOGISTIC, [0.5], 10.0)
    assert abs(traj.states[-1, 0] - 1 / (1 + math.exp(-10))) < 1e-6
    assert traj.times[-1] == 10.0
    assert len(traj.times) >= 201


def test_fixed_point_stays_put():
    traj = integrate_glv(LOGISTIC, [1.0], 5.0)
    assert np.all(traj.states == 1.0)


def test_states_stay_positive():
    sys = GLVSystem.from_lists(B=[[1]], A=[[-1]], lam=[-5])
    traj = integrate_glv(sys, [1.0], 10.0)
    assert np.all(traj.states > 0) and traj.states[-1, 0] < 1e-15


def test_nutku_escapes_in_finite_time():
    with pytest.raises(StepUnderflow) as info:
        integrate_glv(NUTKU, NUTKU_X0, 20.0, 1e-9)
    t_fail = float(str(info.value).split("t=")[1])
    assert t_fail == pytest.approx(NUTKU_ESCAPE_TIME, abs=1e-6)


def test_nutku_conservation_before_escape():
    traj = integrate_glv(NUTKU, NUTKU_X0, 0.4, 1e-9)
    rep = conservation_report(traj, [hamiltonian(NUTKU, NUTKU_F)] + casimirs(NUTKU_F))
    assert rep.worst_relative < 1e-6


def test_drift_shrinks_with_tolerance():
    H = hamiltonian(NUTKU, NUTKU_F)
    # sparse output so the step controller, not the sampling grid, sets the step size
    drift = {tol: conservation_report(integrate_glv(NUTKU, NUTKU_X0, 0.4, tol, np.array([0.4])), [H]).worst_relative
             for tol in (1e-6, 1e-9)}
    assert drift[1e-9] < drift[1e-6]


def test_overflow_guard_raises_blowup():
    sys = GLVSystem.from_lists(B=[[1]], A=[[0]], lam=[1000])
    with pytest.raises(BlowUp):
        integrate_glv(sys, [1.0], 1.0)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        integrate_glv(LOGISTIC, [0.5], 1.0, rel_tol=1e-2)
    with pytest.raises(Exception):
        integrate_glv(LOGISTIC, [0.0], 1.0)


def test_darboux_zero_rank_is_constant():
    sys = GLVSystem.from_lists(B=[[1, 0], [0, 1]], A=[[0, 0], [0, 0]], lam=[0, 0])
    d = darboux_general(sys, GLVPFactorization.from_lists([[0, 0], [0, 0]], [1, 1], [0, 0]))
    traj = integrate_darboux(d, [0.3, -0.2], 2.0)
    assert np.all(traj.states == [0.3, -0.2])


def test_conservation_report_examples():
    const = Trajectory(np.array([0.0, 1.0, 2.0]), np.ones((3, 3)), "x")
    rep = conservation_report(const, [hamiltonian(NUTKU, NUTKU_F)] + casimirs(NUTKU_F))
    assert rep.worst_relative == 0.0

    traj = integrate_glv(NUTKU, NUTKU_X0, 0.4, 1e-9)
    H = hamiltonian(NUTKU, NUTKU_F)
    wrong = HamiltonianExpr(H.chart, ((2, (1, 0, 0)),) + H.terms[1:], H.linear)
    assert conservation_report(traj, [wrong]).worst_relative > 1e-2

    d = darboux_general(NUTKU, NUTKU_F)
    with pytest.raises(ChartMismatch):
        conservation_report(traj, [d.H])


def test_relative_drift_uses_unit_floor():
    traj = Trajectory(np.array([0.0, 1.0]), np.array([[1.0], [math.exp(1e-3)]]), "x")
    rep = conservation_report(traj, [Casimir((1,))])
    assert rep.entries[0].initial == 0.0
    assert rep.entries[0].max_rel_drift == pytest.approx(1e-3)


def test_map_trajectory_examples():
    traj = integrate_glv(NUTKU, NUTKU_X0, 0.3)
    assert np.allclose(map_trajectory(traj, RatMatrix.identity(3)).states, traj.states, rtol=1e-14, atol=0)
    C = RatMatrix([[-1, 0, 0], [0, 1, 0], [1, 1, -1]])
    back = map_trajectory(map_trajectory(traj, C, "forward"), C, "inverse")
    assert np.allclose(back.states, traj.states, rtol=1e-12, atol=0)
    assert qmt_flow_residual(NUTKU, C, traj) < 1e-5
    with pytest.raises(SingularMatrix):
        map_trajectory(traj, RatMatrix([[1, 1, 0], [1, 1, 0], [0, 0, 1]]))


def test_flow_equivalence_random():
    rng = random.Random(30)
    grid = np.linspace(0, 2.0, 41)
    done = 0
    while done < 20:
        sys = random_glv(rng)
        C = random_invertible(rng, sys.n)
        x0 = [rng.uniform(0.5, 2.0) for _ in range(sys.n)]
        try:
            traj = integrate_glv(sys, x0, 2.0, 1e-10, grid)
            mapped = map_trajectory(traj, C)
            other = integrate_glv(apply_qmt(sys, C), mapped.states[0], 2.0, 1e-10, grid)
        except (BlowUp, StepUnderflow):
            continue
        done += 1
        assert qmt_flow_residual(sys, C, traj) < 1e-5
        a, b = mapped.at(grid), other.at(grid)
        assert np.max(np.abs(a - b) / b) < 1e-6


def test_halving_tolerance_does_not_increase_error():
    rng = random.Random(31)
    done = 0
    while done < 20:
        sys = random_glv(rng)
        x0 = [rng.uniform(0.5, 2.0) for _ in range(sys.n)]
        try:
            ref = integrate_glv(sys, x0, 1.0, 1e-12).states[-1]
            errs = [np.max(np.abs(integrate_glv(sys, x0, 1.0, tol).states[-1] - ref) / ref)
                    for tol in (1e-5, 5e-6, 2.5e-6)]
        except (BlowUp, StepUnderflow):
            continue
        done += 1
        assert errs[1] <= errs[0] * 1.0000001 + 1e-14
        assert errs[2] <= errs[1] * 1.0000001 + 1e-14


def test_csv_format():
    traj = Trajectory(np.array([0.0, 0.1]), np.array([[1.0, 2.0], [1.0 / 3, 2.5]]), "x")
    buf = io.StringIO()
    traj.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x1,x2"
    assert lines[2] == "0.10000000000000001,0.33333333333333331,2.5"
    assert float(lines[2].split(",")[1]) == 1.0 / 3


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.ones((2, 1)), "x")
    with pytest.raises(Exception):
        Trajectory(np.array([0.0, 1.0]), np.array([[1.0], [-1.0]]), "x")
