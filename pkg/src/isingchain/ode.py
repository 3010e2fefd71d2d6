"""Fixed-step RK4 integration with dense output and zero-crossing location.

This is the generic, callable-driven integrator. It is deliberately plain
Python: the hot fields of the package have compiled twins in
:mod:`isingchain.kernels`, and this module serves as their reference.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, IntegrationError

DEFAULT_STEP = 1e-4

Field = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution: ``states[i]`` is the state at ``times[i]``.

    ``field`` is kept so events can be refined by re-integration.
    """

    times: np.ndarray
    states: np.ndarray
    step: float
    field: Optional[Field] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or states.shape[0] != times.shape[0]:
            raise DomainError("times and states must have matching lengths")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise DomainError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.times.size

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def component(self, index: int) -> np.ndarray:
        return self.states[:, index]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def rk4_step(field: Field, t: float, x: np.ndarray, h: float) -> np.ndarray:
    k1 = np.asarray(field(t, x), dtype=float)
    k2 = np.asarray(field(t + 0.5 * h, x + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(field(t + 0.5 * h, x + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(field(t + h, x + h * k3), dtype=float)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def time_grid(t0: float, t_end: float, step: float) -> np.ndarray:
    """Nodes t0, t0+step, ... with a shortened last step landing on t_end."""
    if not step > 0.0:
        raise DomainError(f"step must be positive, got {step!r}")
    if not t_end >= t0:
        raise DomainError(f"t_end {t_end!r} precedes start {t0!r}")
    n = int((t_end - t0) / step)
    if t0 + n * step > t_end:
        n -= 1
    grid = t0 + step * np.arange(n + 1)
    if t_end - grid[-1] > 1e-12 * step:
        grid = np.append(grid, t_end)
    else:
        grid[-1] = t_end
    return grid


def integrate(field: Field, x0, t_end: float, step: float = DEFAULT_STEP,
              t0: float = 0.0) -> Trajectory:
    """Classical RK4 from ``t0`` to ``t_end`` with every node stored."""
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise IntegrationError("non-finite initial state", time=t0)
    grid = time_grid(t0, t_end, step)
    states = np.empty((grid.size, x.size))
    states[0] = x
    for i in range(1, grid.size):
        x = rk4_step(field, grid[i - 1], x, grid[i] - grid[i - 1])
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t={grid[i]:.6g}", time=float(grid[i]))
        states[i] = x
    return Trajectory(grid, states, step, field)


def first_zero_crossing(traj: Trajectory, component: int, tol: float = 1e-9) -> Optional[float]:
    """Smallest time at which ``component`` changes sign or touches zero.

    A zero at the first sample only counts when the component is decreasing
    there. The bracketing step is re-integrated from its left node and
    bisected down to ``tol``; without a stored field the bracket is
    interpolated linearly instead.
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    dim = traj.states.shape[1]
    if not -dim <= component < dim:
        raise DomainError(f"component {component} out of range for dimension {dim}")
    component %= dim
    values = traj.states[:, component]
    times = traj.times

    if values[0] == 0.0:
        if traj.field is not None:
            slope = float(np.asarray(traj.field(times[0], traj.states[0]))[component])
        else:
            slope = values[1] - values[0] if values.size > 1 else 0.0
        if slope < 0.0:
            return float(times[0])

    ref = 0.0
    for i in range(values.size):
        v = values[i]
        if i > 0 and v == 0.0:
            return float(times[i])
        if ref == 0.0:
            ref = v
            continue
        if (v > 0.0) != (ref > 0.0):
            return _refine(traj, component, i - 1, tol)
    return None


def _refine(traj, component, i, tol):
    t_left = float(traj.times[i])
    h = float(traj.times[i + 1]) - t_left
    x_left = traj.states[i]
    v_left = x_left[component]
    if traj.field is None:
        v_right = traj.states[i + 1][component]
        return t_left + h * v_left / (v_left - v_right)
    lo, hi = 0.0, h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = rk4_step(traj.field, t_left, x_left, mid)[component]
        if v == 0.0:
            return t_left + mid
        if (v > 0.0) == (v_left > 0.0):
            lo = mid
        else:
            hi = mid
    return t_left + 0.5 * (lo + hi)


def rotation_field(rate: float = 1.0) -> Field:
    """Planar rotation dx/dt = rate * (-y, x)."""
    def field(t, x):
        return np.array([-rate * x[1], rate * x[0]])
    return field


def linear_field(matrix_fn: Callable[[float], np.ndarray]) -> Field:
    def field(t, x):
        return matrix_fn(t) @ x
    return field


def max_abs_derivative(field: Field, traj: Trajectory, component: int,
                       t_lo: float, t_hi: float) -> float:
    mask = (traj.times >= t_lo) & (traj.times <= t_hi)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        idx = np.array([int(np.searchsorted(traj.times, t_lo))])
    idx = np.unique(np.clip(np.concatenate([idx, idx - 1, idx + 1]), 0, len(traj) - 1))
    return max(abs(float(np.asarray(field(traj.times[j], traj.states[j]))[component]))
               for j in idx)


__all__ = [
    "DEFAULT_STEP", "Trajectory", "integrate", "first_zero_crossing", "rk4_step",
    "time_grid", "rotation_field", "linear_field", "max_abs_derivative",
]
