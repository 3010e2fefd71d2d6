"""Time-optimal transfer on the reduced sphere.

The control angle theta obeys the pendulum equation
``theta'' = (a/2) sin(2 theta)`` with ``a = k**2 - 1`` and drives the reduced
state ``r = (r1, r2, r3)``::

    r1' = -r2 cos(theta)
    r2' =  r1 cos(theta) - k r3 sin(theta)
    r3' =  k r2 sin(theta)

from ``(cos alpha, sin alpha, 0)`` to ``(0, cos beta, sin beta)``. Only the
initial data of the pendulum is unknown; :func:`shoot` finds it with nested
one-dimensional searches.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _quad

from . import kernels
from .chain import HALF_PI, TransferEndpoints
from .errors import DomainError, UnreachableTargetError
from .ode import DEFAULT_STEP, Trajectory

SCAN_POINTS = 64
BRACKET_MARGIN = 1.1
PARAM_TOL = 1e-8
EVENT_TOL = 1e-9
SCAN_COARSENING = 10
ACCEPT_RESIDUAL = 1e-5
BOUNDARY_TOL = 1e-5
UNIT_BOOTSTRAP_RATE = 2.0

THETA, THETA_DOT, R1, R2, R3 = range(5)


@dataclass(frozen=True)
class PendulumParams:
    a: float
    c: float

    @classmethod
    def from_state(cls, k: float, theta: float, theta_dot: float) -> "PendulumParams":
        a = k * k - 1.0
        return cls(a, theta_dot * theta_dot + a * math.cos(theta) ** 2)

    def energy(self, theta, theta_dot):
        return np.asarray(theta_dot) ** 2 + self.a * np.cos(theta) ** 2


def pendulum_field(a: float):
    def field(t, y):
        return np.array([y[1], 0.5 * a * math.sin(2.0 * y[0])])
    return field


def geodesic_field(k: float):
    """Joint (theta, theta_dot, r1, r2, r3) field for ratio ``k``."""
    a = k * k - 1.0

    def field(t, y):
        s, c = math.sin(y[0]), math.cos(y[0])
        return np.array([y[1], a * s * c, -y[3] * c, y[2] * c - k * y[4] * s, k * y[3] * s])
    return field


def _uniform_steps(t_end, step):
    n = max(1, math.ceil(t_end / step - 1e-9))
    return n, t_end / n


def pendulum_flow(theta0: float, theta_dot0: float, a: float, t_end: float,
                  step: float = DEFAULT_STEP) -> Trajectory:
    """Integrate the pendulum on a uniform grid that ends exactly at ``t_end``."""
    if not step > 0.0:
        raise DomainError(f"step must be positive, got {step!r}")
    if not t_end >= 0.0:
        raise DomainError(f"t_end must be non-negative, got {t_end!r}")
    if t_end == 0.0:
        return Trajectory(np.zeros(1), np.array([[theta0, theta_dot0]]), step, pendulum_field(a))
    n, h = _uniform_steps(t_end, step)
    # the pendulum block of the joint flow ignores r and k
    states = kernels.geodesic_dense(float(theta0), float(theta_dot0), float(a), 1.0,
                                    np.array([1.0, 0.0, 0.0]), h, n)
    times = h * np.arange(n + 1)
    times[-1] = t_end
    return Trajectory(times, states[:, :2], step, pendulum_field(a))


def reduced_flow(k: float, alpha: float, theta_traj: Trajectory) -> Trajectory:
    """Drive the reduced system with a sampled angle trajectory.

    ``theta_traj`` holds (theta, theta_dot) samples; the angle at RK4
    half-steps comes from cubic Hermite interpolation on each interval.
    """
    if not k > 0.0:
        raise DomainError(f"k must be positive, got {k!r}")
    times = theta_traj.times
    th = theta_traj.states[:, 0]
    thd = theta_traj.states[:, 1]
    r = np.array([math.cos(alpha), math.sin(alpha), 0.0])
    out = np.empty((times.size, 3))
    out[0] = r

    def rhs(theta, r):
        c, s = math.cos(theta), math.sin(theta)
        return np.array([-r[1] * c, r[0] * c - k * r[2] * s, k * r[1] * s])

    for i in range(times.size - 1):
        h = times[i + 1] - times[i]
        # Hermite midpoint: (p0 + p1)/2 + h (m0 - m1)/8
        mid = 0.5 * (th[i] + th[i + 1]) + 0.125 * h * (thd[i] - thd[i + 1])
        k1 = rhs(th[i], r)
        k2 = rhs(mid, r + 0.5 * h * k1)
        k3 = rhs(mid, r + 0.5 * h * k2)
        k4 = rhs(th[i + 1], r + h * k3)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = r
    return Trajectory(times, out, theta_traj.step)


def _min_energy_gap(theta0, theta1, c, a):
    """Minimum of c - a cos^2 over the open interval between the angles."""
    lo, hi = min(theta0, theta1), max(theta0, theta1)

    def contains(offset):
        m = math.ceil((lo - offset) / math.pi)
        return offset + m * math.pi < hi and offset + m * math.pi > lo

    cos2 = [math.cos(lo) ** 2, math.cos(hi) ** 2]
    if a >= 0.0:
        worst = 1.0 if contains(0.0) else max(cos2)
    else:
        worst = 0.0 if contains(HALF_PI) else min(cos2)
    return c - a * worst


def elliptic_time(theta0: float, theta1: float, c: float, a: float) -> float:
    """Elapsed time for the pendulum to sweep from ``theta0`` to ``theta1``.

    Quadrature of ``1/sqrt(c - a cos^2)`` on a monotone branch.
    """
    if theta1 == theta0:
        return 0.0
    if _min_energy_gap(theta0, theta1, c, a) <= 0.0:
        raise DomainError("turning point inside branch: c - a cos^2(theta) <= 0 on the interval")
    lo, hi = min(theta0, theta1), max(theta0, theta1)
    value, _ = _quad.quad(lambda s: 1.0 / math.sqrt(c - a * math.cos(s) ** 2), lo, hi,
                          epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


@dataclass(frozen=True, eq=False)
class GeodesicSolution:
    """A solved transfer. Trajectory columns: theta, theta_dot, r1, r2, r3."""

    k: float
    alpha: float
    beta: float
    theta0: float
    theta_dot0: float
    c: float
    duration: float
    trajectory: Trajectory

    @property
    def times(self):
        return self.trajectory.times

    @property
    def theta(self):
        return self.trajectory.states[:, THETA]

    @property
    def theta_dot(self):
        return self.trajectory.states[:, THETA_DOT]

    @property
    def r(self):
        return self.trajectory.states[:, R1:]

    @property
    def pendulum(self) -> PendulumParams:
        return PendulumParams(self.k * self.k - 1.0, self.c)

    @property
    def target(self) -> np.ndarray:
        return np.array([0.0, math.cos(self.beta), math.sin(self.beta)])

    @property
    def start(self) -> np.ndarray:
        return np.array([math.cos(self.alpha), math.sin(self.alpha), 0.0])

    def boundary_error(self) -> float:
        return float(max(np.linalg.norm(self.r[0] - self.start),
                         np.linalg.norm(self.r[-1] - self.target)))

    def residuals(self) -> dict:
        """Worst-case violations of the invariants along the samples."""
        r = self.r
        k = self.k
        out = {
            "norm": float(np.max(np.abs(np.linalg.norm(r, axis=1) - 1.0))),
            "energy": float(np.max(np.abs(self.pendulum.energy(self.theta, self.theta_dot) - self.c))),
            "boundary": self.boundary_error(),
            "speed": 0.0,
        }
        if len(self.times) >= 5:
            h = self.times[1] - self.times[0]
            d = (r[:-4] - 8.0 * r[1:-3] + 8.0 * r[3:-1] - r[4:]) / (12.0 * h)
            mid = r[2:-2]
            speed = k * k * d[:, 0] ** 2 + d[:, 2] ** 2 - k * k * mid[:, 1] ** 2
            out["speed"] = float(np.max(np.abs(speed)))
        return out


def conventional_time(k: float, alpha: float = 0.0, beta: float = HALF_PI) -> float:
    """Free evolution to r1 = 0, an instantaneous pulse, free evolution to beta."""
    return (HALF_PI - alpha) + beta / k


def _check_ratio(k):
    k = float(k)
    if not math.isfinite(k) or k <= 0.0:
        raise DomainError(f"coupling ratio must be positive and finite, got {k!r}")
    return k


class _Family:
    """One-parameter family of candidate geodesics for fixed (k, alpha).

    For alpha = 0 the parameter is theta_dot(0) with theta(0) = 0; otherwise
    it is theta(0), with theta_dot(0) = sin(theta(0)) cot(alpha).
    """

    def __init__(self, k, alpha, beta, step, tol_time):
        self.k = k
        self.a = k * k - 1.0
        self.alpha = alpha
        self.beta = beta
        self.step = step
        self.tol_time = tol_time
        self.r0 = np.array([math.cos(alpha), math.sin(alpha), 0.0])
        self.cot = 0.0 if alpha == 0.0 else math.cos(alpha) / math.sin(alpha)
        self.horizon = 2.0 * conventional_time(k, alpha, beta) + SCAN_COARSENING * step

    def initial(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.alpha == 0.0:
            return np.zeros_like(p), p
        return p, np.sin(p) * self.cot

    def evaluate(self, p, polish=False, coarse=False):
        """Event time and state at the first terminal event for each parameter.

        The default event is r1 = 0; ``polish`` switches to crossing the
        plane through the r1 axis and the target.
        """
        theta0, theta_dot0 = self.initial(p)
        if polish:
            ev_w = np.array([0.0, math.sin(self.beta), -math.cos(self.beta)])
        else:
            ev_w = np.array([1.0, 0.0, 0.0])
        h = self.step * (SCAN_COARSENING if coarse else 1)
        return kernels.terminal_scan(theta0, theta_dot0, self.a, self.k, self.r0, h,
                                     self.horizon, ev_w, self.tol_time)

    def residual(self, states, polish=False):
        if polish:
            return states[:, R1]
        return states[:, R2] - math.cos(self.beta)

    def scan_grid(self, upper_rate):
        if self.alpha == 0.0:
            return np.linspace(0.0, upper_rate, SCAN_POINTS)
        if self.cot <= upper_rate:
            return np.linspace(0.0, HALF_PI, SCAN_POINTS)
        # steep cot(alpha): resolve small theta(0) as densely as theta_dot(0)
        tan = 1.0 / self.cot
        dense = np.arcsin(np.linspace(0.0, upper_rate, SCAN_POINTS) * tan)
        rest = np.linspace(dense[-1], HALF_PI, SCAN_POINTS // 2 + 1)[1:]
        return np.concatenate([dense, rest])


def _bisect(family, lo, hi, f_lo, polish, tol):
    """Bisection keeping the sign change inside [lo, hi]."""
    best = None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s, y = family.evaluate(mid, polish=polish)
        if not np.isfinite(s[0]):
            return None
        f = family.residual(y, polish)[0]
        if best is None or abs(f) < abs(best[2]):
            best = (mid, s[0], f)
        if f == 0.0:
            return best, (mid, mid)
        if (f > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f
        else:
            hi = mid
    return best, (lo, hi)


def _target_distance(family, state):
    target = np.array([0.0, math.cos(family.beta), math.sin(family.beta)])
    return float(np.linalg.norm(state[R1:] - target))


def _solve_bracket(family, p_lo, p_hi, tol_param):
    """Refine one sign-change bracket; returns (param, event_kind) or None."""
    s, y = family.evaluate(np.array([p_lo, p_hi]))
    if not np.all(np.isfinite(s)):
        return None
    f = family.residual(y)
    if (f[0] > 0.0) == (f[1] > 0.0):
        return None
    found = _bisect(family, p_lo, p_hi, f[0], False, tol_param)
    if found is None:
        return None
    best, (lo, hi) = found
    if best is not None and abs(best[2]) <= ACCEPT_RESIDUAL:
        s_b, y_b = family.evaluate(best[0])
        if _target_distance(family, y_b[0]) <= 10.0 * ACCEPT_RESIDUAL:
            return best[0], False
    # r1 only touches zero at the root (r2 cos(theta) = 0 there); the root is
    # a jump of the r2 residual, so polish with the transversal plane event
    lo_w = max(p_lo, lo - 4.0 * tol_param)
    hi_w = min(p_hi, hi + 4.0 * tol_param)
    s, y = family.evaluate(np.array([lo_w, hi_w]), polish=True)
    if not np.all(np.isfinite(s)):
        return None
    g = family.residual(y, polish=True)
    if (g[0] > 0.0) == (g[1] > 0.0):
        return None
    found = _bisect(family, lo_w, hi_w, g[0], True, 1e-15 * max(1.0, abs(hi_w)))
    if found is None or found[0] is None:
        return None
    best = found[0]
    s_b, y_b = family.evaluate(best[0], polish=True)
    if _target_distance(family, y_b[0]) <= 10.0 * ACCEPT_RESIDUAL:
        return best[0], True
    return None


def _build_solution(family, p, polish, step):
    theta0, theta_dot0 = family.initial(p)
    theta0, theta_dot0 = float(theta0[0]), float(theta_dot0[0])
    s, _ = family.evaluate(p, polish=polish)
    duration = float(s[0])
    return _dense_solution(family.k, family.alpha, family.beta, theta0, theta_dot0,
                           duration, step)


def _dense_solution(k, alpha, beta, theta0, theta_dot0, duration, step):
    r0 = np.array([math.cos(alpha), math.sin(alpha), 0.0])
    if duration <= 0.0:
        times = np.zeros(1)
        states = np.array([[theta0, theta_dot0, *r0]])
    else:
        n, h = _uniform_steps(duration, step)
        states = kernels.geodesic_dense(theta0, theta_dot0, k * k - 1.0, k, r0, h, n)
        times = h * np.arange(n + 1)
        times[-1] = duration
    c = PendulumParams.from_state(k, theta0, theta_dot0).c
    return GeodesicSolution(k, alpha, beta, theta0, theta_dot0, c, duration,
                            Trajectory(times, states, step, geodesic_field(k)))


def _equator_solution(k, beta, step):
    # start on r1 = 0: hold theta at pi/2 and rotate (r2, r3) at rate k
    return _dense_solution(k, HALF_PI, beta, HALF_PI, 0.0, beta / k, step)


def mirror_solution(sol: GeodesicSolution, k: float, alpha: float, beta: float) -> GeodesicSolution:
    """Map a solution for ratio 1/k back to ratio k.

    Reversing both time and the order of the four transfer coordinates turns
    the ratio-k system into the ratio-1/k one with time scaled by k, so the
    mirrored duration is ``duration / k`` and ``theta -> pi/2 - theta``.
    """
    kappa = 1.0 / k
    duration = sol.duration * kappa
    states = sol.trajectory.states[::-1]
    times = duration - kappa * sol.times[::-1]
    times[0] = 0.0
    times[-1] = duration
    mapped = np.empty_like(states)
    mapped[:, THETA] = HALF_PI - states[:, THETA]
    mapped[:, THETA_DOT] = k * states[:, THETA_DOT]
    mapped[:, R1] = states[:, R3]
    mapped[:, R2] = states[:, R2]
    mapped[:, R3] = states[:, R1]
    theta0, theta_dot0 = float(mapped[0, THETA]), float(mapped[0, THETA_DOT])
    c = PendulumParams.from_state(k, theta0, theta_dot0).c
    step = sol.trajectory.step * kappa
    return GeodesicSolution(k, alpha, beta, theta0, theta_dot0, c, duration,
                            Trajectory(times, mapped, step, geodesic_field(k)))


def _search(family, upper_rate, tol_param, dense_step=None):
    grid = family.scan_grid(upper_rate)
    s, y = family.evaluate(grid, coarse=True)
    f = family.residual(y)
    ok = np.isfinite(s)

    brackets = []
    for i in range(grid.size):
        if ok[i] and abs(f[i]) <= 1e-12:
            brackets.append((s[i], grid[i], grid[i]))
    for i in range(grid.size - 1):
        if ok[i] and ok[i + 1] and (f[i] > 0.0) != (f[i + 1] > 0.0):
            brackets.append((min(s[i], s[i + 1]), grid[i], grid[i + 1]))
    brackets.sort()

    best = None
    for s_min, lo, hi in brackets:
        if best is not None and s_min > best.duration:
            break
        if lo == hi:
            result = (lo, False)
        else:
            result = _solve_bracket(family, lo, hi, tol_param)
        if result is None:
            continue
        sol = _build_solution(family, result[0], result[1], dense_step or family.step)
        if sol.boundary_error() > BOUNDARY_TOL:
            continue
        if best is None or sol.duration < best.duration:
            best = sol
    if best is None:
        raise UnreachableTargetError(
            f"target unreachable within bracket [{grid[0]:.6g}, {grid[-1]:.6g}] "
            f"for k={family.k:.6g}, alpha={family.alpha:.6g}, beta={family.beta:.6g}",
            bracket=(float(grid[0]), float(grid[-1])),
            endpoint_residuals=(float(f[0]), float(f[-1])))
    return best


@functools.lru_cache(maxsize=None)
def unit_rate(step: float = DEFAULT_STEP) -> float:
    """Constant control-angle rate of the k = 1 transfer to (0, 0, 1)."""
    family = _Family(1.0, 0.0, HALF_PI, step, EVENT_TOL)
    return _search(family, UNIT_BOOTSTRAP_RATE, PARAM_TOL).theta_dot0


def shoot(k: float, endpoints: TransferEndpoints, tol_time: float = EVENT_TOL,
          tol_angle: float = PARAM_TOL, step: float = DEFAULT_STEP,
          mirror: bool = True) -> GeodesicSolution:
    """Minimal-time geodesic from ``(cos a, sin a, 0)`` to ``(0, cos b, sin b)``.

    ``tol_time`` bounds the terminal event time, ``tol_angle`` the shooting
    parameter. Ratios below one are solved through the mirrored problem.
    With ``mirror=False`` they are shot directly over ``[0, 1.1 C1 / k]``
    instead; this only converges for moderate ratios, because the optimal
    pendulum energy approaches the separatrix (c -> 0) as k decreases.
    """
    k = _check_ratio(k)
    if not isinstance(endpoints, TransferEndpoints):
        endpoints = TransferEndpoints(*endpoints)
    alpha, beta = endpoints.alpha, endpoints.beta
    if k < 1.0 and not mirror:
        if alpha == HALF_PI:
            return _equator_solution(k, beta, step)
        family = _Family(k, alpha, beta, step, tol_time)
        return _search(family, BRACKET_MARGIN * unit_rate(step) / k, tol_angle)
    if k < 1.0:
        # search at the nominal step; the dense output is refined so that
        # the rescaled samples stay within ``step`` of each other
        mirrored = _shoot(1.0 / k, HALF_PI - beta, HALF_PI - alpha, tol_time, tol_angle,
                          step, step * k)
        return mirror_solution(mirrored, k, alpha, beta)
    return _shoot(k, alpha, beta, tol_time, tol_angle, step, step)


def _shoot(k, alpha, beta, tol_time, tol_angle, step, dense_step):
    if alpha == HALF_PI:
        return _equator_solution(k, beta, dense_step)
    family = _Family(k, alpha, beta, step, tol_time)
    return _search(family, BRACKET_MARGIN * unit_rate(step), tol_angle, dense_step)


_MEMO: dict = {}


def round_angle(x: float, digits: int = 12) -> float:
    """Round to ``digits`` decimals, clamped so pi/2 stays exactly pi/2."""
    return min(round(float(x), digits), HALF_PI)


def _memo_key(k, alpha, beta):
    return (round(float(k), 12), round_angle(alpha), round_angle(beta))


def minimal_time(k: float, alpha: float = 0.0, beta: float = HALF_PI) -> float:
    """Memoized optimal duration; inputs are rounded to 1e-12 before solving."""
    key = _memo_key(k, alpha, beta)
    value = _MEMO.get(key)
    if value is None:
        value = shoot(key[0], TransferEndpoints(key[1], key[2])).duration
        _MEMO[key] = value
    return value


def clear_memo():
    _MEMO.clear()


def eta(k: float) -> float:
    """Ratio of the optimal time to the conventional pi/2 + pi/(2k)."""
    return minimal_time(k, 0.0, HALF_PI) / conventional_time(k)
