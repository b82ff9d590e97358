"""Trajectory integration and conservation checks.

GLV flows are integrated in u = ln x, where they read
``du/dt = lambda + A exp(B u)``; positivity of x is then structural.
Darboux systems are integrated directly in their constant-structure chart.
The integrator is the Dormand-Prince 5(4) pair with a PI step controller.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np

from .darboux import DarbouxSystem
from .errors import BlowUp, ChartMismatch, DimensionMismatch, DomainError, StepUnderflow
from .glv import GLVSystem, apply_qmt
from .poisson import LOG_CHART, POSITIVE_ORTHANT
from .ratmat import RatMatrix, invert

OVERFLOW_GUARD = 700.0
DEFAULT_SAMPLES = 200

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY, _FACMIN, _FACMAX = 0.9, 0.2, 10.0
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    chart: str

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise DimensionMismatch("one state per time sample")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.chart == POSITIVE_ORTHANT and np.any(self.states <= 0):
            raise DomainError("positive-orthant trajectory left the orthant")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def at(self, times: Sequence[float]) -> np.ndarray:
        """States at sample times that are present exactly in ``self.times``."""
        idx = np.searchsorted(self.times, times)
        idx = np.clip(idx, 0, len(self.times) - 1)
        if not np.array_equal(self.times[idx], np.asarray(times, dtype=float)):
            raise KeyError("requested time is not a sample of this trajectory")
        return self.states[idx]

    def write_csv(self, fh: TextIO) -> None:
        var = "x" if self.chart == POSITIVE_ORTHANT else "y"
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{var}{i + 1}" for i in range(self.dim)])
        for t, s in zip(self.times, self.states):
            w.writerow([format(t, ".17g")] + [format(v, ".17g") for v in s])


@dataclass(frozen=True)
class QuantityDrift:
    label: str
    initial: float
    max_abs_drift: float
    max_rel_drift: float


@dataclass(frozen=True)
class ConservationReport:
    entries: tuple

    @property
    def worst_relative(self) -> float:
        return max((e.max_rel_drift for e in self.entries), default=0.0)

    def to_dict(self) -> dict:
        return {"quantities": [e.__dict__ for e in self.entries], "worst_relative_drift": self.worst_relative}


def default_times(t_end: float, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    return np.linspace(0.0, t_end, samples + 1)


def _rms(v: np.ndarray) -> float:
    return math.sqrt(float(np.mean(v * v))) if v.size else 0.0


def _initial_step(f, t0, y0, f0, rtol, atol) -> float:
    sc = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / sc), _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = _rms((f(t0 + h0, y1) - f0) / sc) / h0
    big = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if big <= 1e-15 else (0.01 / big) ** (1 / 5)
    return min(100 * h0, h1)


def dopri54(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, t_end: float, rel_tol: float,
            t_eval: np.ndarray | None = None, guard: float = OVERFLOW_GUARD,
            max_steps: int = 1_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive Dormand-Prince integration from t = 0 to ``t_end``.

    Output holds every accepted step plus every time in ``t_eval`` (hit
    exactly by shortening steps).  Absolute tolerance is rel_tol * 1e-3.
    """
    y = np.array(y0, dtype=float)
    if t_eval is None:
        t_eval = default_times(t_end)
    targets = [t for t in np.asarray(t_eval, dtype=float) if 0 < t <= t_end]
    if not targets or targets[-1] < t_end:
        targets.append(t_end)
    atol = rel_tol * 1e-3
    t = 0.0
    times, states = [0.0], [y.copy()]
    if t_end <= 0 or y.size == 0:
        for tt in targets:
            if tt > 0:
                times.append(tt)
                states.append(y.copy())
        return np.array(times), np.array(states).reshape(len(times), y.size)

    k = [None] * 7
    k[0] = f(t, y)
    h = _initial_step(f, t, y, k[0], rel_tol, atol)
    err_old = 1e-4
    ti = 0
    steps = 0
    while ti < len(targets):
        steps += 1
        if steps > max_steps:
            raise StepUnderflow(f"exceeded {max_steps} steps")
        target = targets[ti]
        hit = t + 1.01 * h >= target  # avoid leaving a sliver before the target
        step = target - t if hit else h
        if step <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepUnderflow(f"step size underflow at t={t}")
        for s in range(1, 7):
            ys = y + step * sum(a * k[j] for j, a in enumerate(_A[s]) if a)
            k[s] = f(t + _C[s] * step, ys)
        y_new = ys
        err_vec = step * sum(e * kk for e, kk in zip(_E, k) if e)
        sc = atol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(over="ignore", invalid="ignore"):
            err = _rms(err_vec / sc)
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            err = np.inf
        if err <= 1.0:
            fac = min(_FACMAX, max(_FACMIN, _SAFETY * err ** -_ALPHA * err_old ** _BETA)) if err > 0 else _FACMAX
            err_old = max(err, 1e-4)
            t = target if hit else t + step
            y = y_new
            if np.any(np.abs(y) > guard):
                raise BlowUp(f"state exceeded |{guard}| at t={t}")
            k[0] = k[6]
            times.append(t)
            states.append(y.copy())
            if hit:
                ti += 1
            h = step * fac if not hit else max(h, step * fac)
        else:
            if not np.isfinite(err):
                h = step * _FACMIN
            else:
                h = step * max(_FACMIN, _SAFETY * err ** -_ALPHA)
    return np.array(times), np.array(states)


def _check_tol(rel_tol: float) -> None:
    if not 1e-12 <= rel_tol <= 1e-3:
        raise ValueError("rel_tol must lie in [1e-12, 1e-3]")


def integrate_glv(sys: GLVSystem, x0, t_end: float, rel_tol: float = 1e-9,
                  t_eval: np.ndarray | None = None) -> Trajectory:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise DimensionMismatch(f"initial condition needs {sys.n} entries")
    if np.any(~(x0 > 0)):
        raise DomainError("initial condition must be strictly positive")
    _check_tol(rel_tol)
    times, U = dopri54(lambda t, u: sys.log_velocity(u), np.log(x0), t_end, rel_tol, t_eval)
    return Trajectory(times, np.exp(U), POSITIVE_ORTHANT)


def integrate_darboux(d: DarbouxSystem, y0, t_end: float, rel_tol: float = 1e-9,
                      t_eval: np.ndarray | None = None) -> Trajectory:
    """Integrate dy/dt = S grad H(y); coordinates past index r are held fixed."""
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (d.n,):
        raise DimensionMismatch(f"initial condition needs {d.n} entries")
    _check_tol(rel_tol)
    r = d.r
    S = d.J.to_numpy()[:r, :r]
    tail = y0[r:]

    def rhs(t, z):
        return S @ d.H.gradient(np.concatenate([z, tail]))[:r]

    times, Z = dopri54(rhs, y0[:r], t_end, rel_tol, t_eval)
    states = np.hstack([Z, np.broadcast_to(tail, (len(times), d.n - r))])
    return Trajectory(times, states, LOG_CHART)


def conservation_report(traj: Trajectory, quantities: Sequence, labels: Sequence[str] | None = None
                        ) -> ConservationReport:
    """Drift of each quantity along ``traj``; relative drift divides by max(|initial|, 1)."""
    entries = []
    for i, q in enumerate(quantities):
        if q.chart != traj.chart:
            raise ChartMismatch(f"quantity lives in chart {q.chart!r}, trajectory in {traj.chart!r}")
        vals = np.array([q.value(s) for s in traj.states])
        drift = float(np.max(np.abs(vals - vals[0])))
        label = labels[i] if labels else str(q)
        entries.append(QuantityDrift(label, float(vals[0]), drift, drift / max(abs(vals[0]), 1.0)))
    return ConservationReport(tuple(entries))


def map_trajectory(traj: Trajectory, C: RatMatrix, direction: str = "forward") -> Trajectory:
    """Carry a positive-orthant trajectory through the QMT x_i = prod_k y_k ** C_ik.

    ``forward`` maps states x of a system to states y of ``apply_qmt(sys, C)``;
    ``inverse`` maps y back to x.
    """
    if traj.chart != POSITIVE_ORTHANT:
        raise ChartMismatch("QMTs act on positive-orthant trajectories")
    if direction == "forward":
        T = invert(C).to_numpy()
    elif direction == "inverse":
        T = C.to_numpy()
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    return Trajectory(traj.times, np.exp(np.log(traj.states) @ T.T), POSITIVE_ORTHANT)


def qmt_flow_residual(sys: GLVSystem, C: RatMatrix, traj: Trajectory) -> float:
    """Max relative mismatch between the mapped trajectory's velocity and the transformed field.

    The velocity of y = exp(C^-1 ln x) along a trajectory of ``sys`` follows
    from the chain rule, dy/dt = y * C^-1 (dx/dt / x); it is compared with
    the vector field of ``apply_qmt(sys, C)`` evaluated at y.
    """
    moved = apply_qmt(sys, C)
    Ci = invert(C).to_numpy()
    mapped = map_trajectory(traj, C, "forward")
    worst = 0.0
    for x, y in zip(traj.states, mapped.states):
        chain = y * (Ci @ sys.log_velocity(np.log(x)))
        field = y * moved.log_velocity(np.log(y))
        worst = max(worst, float(np.max(np.abs(chain - field)) / max(1.0, float(np.max(np.abs(field))))))
    return worst
