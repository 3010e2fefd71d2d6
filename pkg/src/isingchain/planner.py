"""Chain planning: sequential segment transfers chosen by dynamic programming.

Segment ``l`` (1-based, ``1 <= l <= n-2``) drives control ``u_l`` while the
couplings ``k_l`` and ``k_{l+1}`` act on the four coordinates
``x[2l-2 : 2l+2]``. It carries the boundary angle ``beta_l`` to
``beta_{l+1}``; measured in units of ``1/k_l`` it is the single-segment
problem with ratio ``k_{l+1}/k_l``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .chain import HALF_PI, NormalizedChain, TransferEndpoints, dimensionless_to_seconds
from .errors import DomainError, IsingChainError, SegmentSolveError
from .geodesic import minimal_time, round_angle, shoot
from .pulse import (HardRotation, PulseSchedule, SoftSegment, TransferReport,
                    conventional_chain_sequence, reconstruct_control, simulate_schedule, _wait)

DEFAULT_GRID = 129
MIN_GRID = 9
GOLDEN_TOL = 1e-6
# segment angles are rounded to 1e-9 rad so DP cells share memo entries
ANGLE_DIGITS = 9


@dataclass(frozen=True)
class SegmentProblem:
    l: int
    beta_in: float
    beta_out: float
    k_l: float
    k_lplus1: float

    def __post_init__(self):
        TransferEndpoints(self.beta_in, self.beta_out)
        for name in ("k_l", "k_lplus1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be positive, got {value!r}")

    @property
    def ratio(self) -> float:
        return self.k_lplus1 / self.k_l


def segment_time(p: SegmentProblem) -> float:
    """Optimal segment duration; the solve runs in units of ``1/k_l``."""
    try:
        return minimal_time(p.ratio, round_angle(p.beta_in, ANGLE_DIGITS),
                            round_angle(p.beta_out, ANGLE_DIGITS)) / p.k_l
    except IsingChainError as exc:
        raise SegmentSolveError(f"segment {p.l} failed for beta {p.beta_in:.9g} -> "
                                f"{p.beta_out:.9g}: {exc}", p.l, p.beta_in, p.beta_out) from exc


@dataclass(frozen=True, eq=False)
class ChainPlan:
    chain: NormalizedChain
    betas: tuple
    segment_times: tuple
    total_time: float
    solutions: tuple = field(repr=False)

    @property
    def conventional_time(self) -> float:
        return self.chain.conventional_time()

    @property
    def savings_percent(self) -> float:
        """How much longer the conventional sequence takes, in percent."""
        return 100.0 * (self.conventional_time - self.total_time) / self.total_time

    @property
    def total_seconds(self) -> float:
        return dimensionless_to_seconds(self.total_time, self.chain)

    def to_dict(self) -> dict:
        return {
            "betas": [float(b) for b in self.betas],
            "segment_times": [float(t) for t in self.segment_times],
            "total_time": float(self.total_time),
            "units": "1/J_ref",
            "ref_hz": float(self.chain.ref_hz),
            "ref_index": self.chain.ref_index,
            "ratios": [float(k) for k in self.chain.ratios],
            "total_seconds": float(self.total_seconds),
            "conventional_time": float(self.conventional_time),
            "savings_percent": float(self.savings_percent),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _problem(chain, l, beta_in, beta_out):
    return SegmentProblem(l, beta_in, beta_out, chain.ratios[l - 1], chain.ratios[l])


def _golden(fun, lo, hi, tol):
    res = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": tol})
    return float(res.x), float(res.fun)


def _refine(fun, grid, values, tol):
    """Grid argmin refined inside its neighbouring cells; the grid wins ties."""
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    x, v = _golden(fun, lo, hi, tol)
    if v < values[i]:
        return x, v
    return float(grid[i]), float(values[i])


def _finish_plan(chain, betas):
    n_seg = len(betas) - 1
    times = []
    solutions = []
    for l in range(1, n_seg + 1):
        p = _problem(chain, l, betas[l - 1], betas[l])
        times.append(segment_time(p))
        try:
            sol = shoot(p.ratio, TransferEndpoints(round_angle(p.beta_in, ANGLE_DIGITS),
                                                   round_angle(p.beta_out, ANGLE_DIGITS)))
        except IsingChainError as exc:
            raise SegmentSolveError(str(exc), l, p.beta_in, p.beta_out) from exc
        solutions.append(sol)
    return ChainPlan(chain, tuple(betas), tuple(times), math.fsum(times), tuple(solutions))


def dp_solve(chain: NormalizedChain, grid_points: int = DEFAULT_GRID,
             tol: float = GOLDEN_TOL) -> ChainPlan:
    """Backward dynamic program over the interior boundary angles.

    ``J_l(beta) = min_eta T_l(beta, eta) + J_{l+1}(eta)`` with the terminal
    stage ``J_{n-2}(beta) = T_{n-2}(beta, pi/2)``. Stage values are tabulated
    on a uniform grid; off-grid values of inner stages use a cubic spline
    through the table, while the terminal stage is always solved exactly.
    """
    if grid_points < MIN_GRID:
        raise DomainError(f"grid_points must be at least {MIN_GRID}, got {grid_points}")
    n = chain.n_spins
    if n == 2:
        t = HALF_PI / chain.ratios[0]
        return ChainPlan(chain, (), (t,), t, ())
    n_seg = n - 2
    if n_seg == 1:
        return _finish_plan(chain, (0.0, HALF_PI))

    grid = np.linspace(0.0, HALF_PI, grid_points)
    grid[-1] = HALF_PI

    def terminal(beta):
        return segment_time(_problem(chain, n_seg, beta, HALF_PI))

    def best_step(l, beta, value_fn, table):
        """Minimize T_l(beta, eta) + J_{l+1}(eta) over eta."""
        def objective(eta):
            return segment_time(_problem(chain, l, beta, eta)) + value_fn(eta)
        values = np.array([segment_time(_problem(chain, l, beta, eta)) + table[i]
                           for i, eta in enumerate(grid)])
        return _refine(objective, grid, values, tol)

    # stage l -> (J_l callable, J_l tabulated on the grid)
    stages = {n_seg: (terminal, np.array([terminal(b) for b in grid]))}
    for l in range(n_seg - 1, 1, -1):
        value_fn, table = stages[l + 1]
        own = np.array([best_step(l, beta, value_fn, table)[1] for beta in grid])
        spline = CubicSpline(grid, own)
        stages[l] = (lambda eta, s=spline: float(s(eta)), own)

    # forward pass from beta_1 = 0, re-optimizing each stage at the reached angle
    betas = [0.0]
    for l in range(1, n_seg):
        value_fn, table = stages[l + 1]
        betas.append(best_step(l, betas[-1], value_fn, table)[0])
    betas.append(HALF_PI)
    return _finish_plan(chain, tuple(betas))


def objective_curve(chain: NormalizedChain, gammas: Sequence[float]) -> list:
    """Two-segment objective ``J(gamma)`` of a four-spin chain."""
    if chain.n_spins != 4:
        raise DomainError(f"objective_curve needs a 4-spin chain, got {chain.n_spins} spins")
    out = []
    for g in gammas:
        g = float(g)
        first = segment_time(_problem(chain, 1, 0.0, g))
        second = segment_time(_problem(chain, 2, g, HALF_PI))
        out.append((g, first + second))
    return out


def _rescale(schedule: PulseSchedule, rate: float, offset: float) -> list:
    """Segment-unit schedule to chain units: time / rate, amplitude * rate."""
    out = []
    for seg in schedule.segments:
        if isinstance(seg, SoftSegment):
            out.append(SoftSegment(offset + seg.times / rate, seg.u * rate, seg.control_index))
        else:
            out.append(HardRotation(offset + seg.time / rate, seg.angle, seg.control_index,
                                    seg.axis, seg.spin))
    return out


def assemble_chain_pulse(plan: ChainPlan) -> PulseSchedule:
    """Concatenate the segment controls; segment ``l`` uses channel ``l`` only."""
    chain = plan.chain
    if chain.n_spins == 2:
        return PulseSchedule((_wait(0.0, plan.total_time),), chain.ratios)
    segments: list = []
    t = 0.0
    for l, sol in enumerate(plan.solutions, start=1):
        k_l = chain.ratios[l - 1]
        segments.extend(_rescale(reconstruct_control(sol, control_index=l), k_l, t))
        t += sol.duration / k_l
    return PulseSchedule(tuple(segments), chain.ratios)


def conventional_plan_schedule(chain: NormalizedChain) -> PulseSchedule:
    return conventional_chain_sequence(chain.ratios)


def simulate_chain(schedule: PulseSchedule, chain: NormalizedChain, x0=None,
                   target=None, record: bool = False) -> TransferReport:
    """Integrate the full chain system; the default transfer is e_1 -> e_last."""
    dim = chain.state_dim
    if x0 is None:
        x0 = np.zeros(dim)
        x0[0] = 1.0
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dim,):
        raise DomainError(f"state dimension {x0.shape} does not match the {chain.n_spins}-spin "
                          f"chain ({dim} coordinates)")
    return simulate_schedule(schedule, chain.ratios, x0, target, record)


def plan_from_dict(data: dict, chain: NormalizedChain) -> Optional[ChainPlan]:
    """Rebuild a plan from its JSON form by re-solving the recorded segments."""
    betas = tuple(float(b) for b in data["betas"])
    if chain.n_spins == 2:
        t = HALF_PI / chain.ratios[0]
        return ChainPlan(chain, (), (t,), t, ())
    if len(betas) != chain.n_spins - 1:
        raise DomainError(f"plan has {len(betas)} boundary angles, chain needs {chain.n_spins - 1}")
    return _finish_plan(chain, betas)


__all__ = [
    "SegmentProblem", "ChainPlan", "segment_time", "dp_solve", "objective_curve",
    "assemble_chain_pulse", "simulate_chain", "conventional_plan_schedule", "plan_from_dict",
]
