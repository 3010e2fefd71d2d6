"""Control amplitudes, hard-pulse baselines and forward verification.

A schedule is a time-ordered list of soft segments (sampled control
amplitude on one control channel) and instantaneous hard rotations. Control
channel ``l`` (1-based) rotates the plane of state coordinates
``(x[2l-1], x[2l])`` (0-based indices); channel 0 is free evolution. Hard
rotations with ``control_index=None`` are local pulses acting outside the
modeled coordinates; they are kept for bookkeeping and skipped in simulation.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .chain import HALF_PI
from .errors import DomainError, ParseError
from .geodesic import GeodesicSolution
from .ode import DEFAULT_STEP

UNITS = "1/J_ref"
CSV_HEADER = ("t", "u", "control_index")
EXPORT_POINTS = 1000
ENERGY_TOL = 1e-8
# boundary rotations are skipped when the control plane is (numerically) empty
PLANE_EPS = 1e-12
SIM_STEP = DEFAULT_STEP
RATIO_RTOL = 1e-12


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class SoftSegment:
    """Control samples ``u`` at uniformly spaced absolute ``times``."""

    times: np.ndarray
    u: np.ndarray
    control_index: int

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        u = np.array(self.u, dtype=float)
        if times.ndim != 1 or times.shape != u.shape or times.size == 0:
            raise DomainError("segment times and amplitudes must be equal-length 1-d arrays")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise DomainError("segment sample times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(u))):
            raise DomainError("segment samples must be finite")
        if self.control_index < 0:
            raise DomainError(f"control index must be >= 0, got {self.control_index}")
        if self.control_index == 0 and np.any(u != 0.0):
            raise DomainError("free-evolution segments must have zero amplitude")
        times.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "u", u)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def spacing(self) -> float:
        return 0.0 if self.times.size < 2 else (self.end - self.start) / (self.times.size - 1)

    def shifted(self, offset: float) -> "SoftSegment":
        return SoftSegment(self.times + offset, self.u, self.control_index)


@dataclass(frozen=True)
class HardRotation:
    """Instantaneous rotation by ``angle`` about ``axis`` on spin ``spin``."""

    time: float
    angle: float
    control_index: Optional[int]
    axis: str = "y"
    spin: Optional[int] = None

    def __post_init__(self):
        if self.control_index is not None and self.control_index < 1:
            raise DomainError("hard rotations act on a control channel l >= 1")
        if self.spin is None:
            if self.control_index is None:
                raise DomainError("local rotations need an explicit spin")
            # channel l addresses the (l+1)-th spin of the chain
            object.__setattr__(self, "spin", self.control_index + 1)

    @property
    def modeled(self) -> bool:
        return self.control_index is not None

    def shifted(self, offset: float) -> "HardRotation":
        return HardRotation(self.time + offset, self.angle, self.control_index, self.axis, self.spin)


Segment = Union[SoftSegment, HardRotation]


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered segments in dimensionless time (units of 1/J_ref).

    ``ratios`` records the coupling ratios the schedule was built for, or
    ``None`` when unknown (e.g. read back from CSV).
    """

    segments: tuple
    ratios: Optional[tuple] = None
    units: str = UNITS

    def __post_init__(self):
        segments = tuple(self.segments)
        t = None
        for seg in segments:
            if isinstance(seg, SoftSegment):
                if t is not None and abs(seg.start - t) > 1e-9 * max(1.0, abs(t)):
                    raise DomainError(f"soft segment starts at {seg.start!r}, expected {t!r}")
                t = seg.end
            elif isinstance(seg, HardRotation):
                if t is not None and abs(seg.time - t) > 1e-9 * max(1.0, abs(t)):
                    raise DomainError(f"hard rotation at {seg.time!r}, expected {t!r}")
                if t is None:
                    t = seg.time
            else:
                raise DomainError(f"unknown segment type {type(seg).__name__}")
        object.__setattr__(self, "segments", segments)
        if self.ratios is not None:
            object.__setattr__(self, "ratios", tuple(float(k) for k in self.ratios))

    @property
    def soft_segments(self) -> list:
        return [s for s in self.segments if isinstance(s, SoftSegment)]

    @property
    def hard_rotations(self) -> list:
        return [s for s in self.segments if isinstance(s, HardRotation)]

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.soft_segments)

    @property
    def start(self) -> float:
        if not self.segments:
            return 0.0
        first = self.segments[0]
        return first.start if isinstance(first, SoftSegment) else first.time

    @property
    def max_control_index(self) -> int:
        idx = [s.control_index for s in self.segments if s.control_index is not None]
        return max(idx, default=0)

    def shifted(self, offset: float) -> "PulseSchedule":
        return PulseSchedule(tuple(s.shifted(offset) for s in self.segments), self.ratios, self.units)

    def amplitude(self, control_index: int, t) -> np.ndarray:
        """Sampled amplitude of one channel, linearly interpolated; zero elsewhere."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for seg in self.soft_segments:
            if seg.control_index != control_index or seg.times.size < 2:
                continue
            inside = (t >= seg.start) & (t <= seg.end)
            out[inside] = np.interp(t[inside], seg.times, seg.u)
        return out


@dataclass(frozen=True, eq=False)
class TransferReport:
    initial_state: np.ndarray
    final_state: np.ndarray
    target_state: np.ndarray
    fidelity: float
    duration: float
    times: Optional[np.ndarray] = field(default=None, repr=False)
    states: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def norm_drift(self) -> float:
        return abs(float(np.linalg.norm(self.final_state) - np.linalg.norm(self.initial_state)))

    def to_dict(self) -> dict:
        return {"duration": float(self.duration), "fidelity": float(self.fidelity),
                "target": [float(v) for v in self.target_state],
                "final": [float(v) for v in self.final_state]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------ construction

def _uniform(t0: float, duration: float, step: float) -> np.ndarray:
    n = max(1, math.ceil(duration / step - 1e-9))
    times = t0 + (duration / n) * np.arange(n + 1)
    times[-1] = t0 + duration
    return times


def _wait(t0: float, duration: float, step: float = DEFAULT_STEP) -> SoftSegment:
    times = _uniform(t0, duration, step) if duration > 0.0 else np.array([t0])
    return SoftSegment(times, np.zeros_like(times), 0)


def reconstruct_control(sol: GeodesicSolution, control_index: int = 1,
                        t0: float = 0.0) -> PulseSchedule:
    """Control that makes the bilinear system follow ``sol``.

    Along a geodesic the amplitude is ``u = 2 theta_dot``. Hard rotations at
    either end align the control plane with the angle theta whenever r2 is
    nonzero there, so the transfer also works for tilted start and target.
    """
    theta, theta_dot = sol.theta, sol.theta_dot
    drift = float(np.max(np.abs(sol.pendulum.energy(theta, theta_dot) - sol.c)))
    if not drift <= ENERGY_TOL:
        raise DomainError(f"trajectory violates energy conservation by {drift:.3g} "
                          f"(tolerance {ENERGY_TOL:g}); refusing to build a control")
    r2 = sol.r[:, 1]
    segments: list = []
    if r2[0] > PLANE_EPS and theta[0] != 0.0:
        segments.append(HardRotation(t0, float(theta[0]), control_index))
    if sol.duration > 0.0:
        u = 2.0 * np.array(theta_dot)
        if u.size >= 3:
            u[-1] = 2.0 * u[-2] - u[-3]
        segments.append(SoftSegment(t0 + sol.times, u, control_index))
    end = t0 + sol.duration
    final_turn = HALF_PI - float(theta[-1])
    if r2[-1] > PLANE_EPS and final_turn != 0.0:
        segments.append(HardRotation(end, final_turn, control_index))
    return PulseSchedule(tuple(segments), (1.0, sol.k))


def conventional_chain_sequence(ratios: Sequence[float],
                                step: float = DEFAULT_STEP) -> PulseSchedule:
    """Quarter-period waits pi/(2 k_l) separated by hard pi/2 pulses on each channel."""
    ratios = tuple(float(k) for k in ratios)
    if not ratios or any(not (math.isfinite(k) and k > 0.0) for k in ratios):
        raise DomainError(f"coupling ratios must be positive, got {ratios!r}")
    segments: list = []
    t = 0.0
    for l, k in enumerate(ratios, start=1):
        if l > 1:
            segments.append(HardRotation(t, HALF_PI, l - 1))
        wait = _wait(t, HALF_PI / k, step)
        segments.append(wait)
        t = wait.end
    return PulseSchedule(tuple(segments), ratios)


def conventional_sequence(k: float, n_qubit_form: bool = False,
                          step: float = DEFAULT_STEP) -> PulseSchedule:
    """Hard-pulse baseline: wait pi/2, pi/2 pulse, wait pi/(2k).

    With ``n_qubit_form`` the closing local x pulses on spins 1 and 2 are
    appended as unmodeled markers.
    """
    base = conventional_chain_sequence((1.0, k), step)
    if not n_qubit_form:
        return base
    end = base.segments[-1].end
    local = (HardRotation(end, HALF_PI, None, "x", 1), HardRotation(end, HALF_PI, None, "x", 2))
    return PulseSchedule(base.segments + local, base.ratios)


# -------------------------------------------------------------- simulation

def _check_ratios(schedule: PulseSchedule, ratios: tuple):
    if schedule.ratios is None:
        return
    if len(schedule.ratios) != len(ratios) or not np.allclose(
            schedule.ratios, ratios, rtol=RATIO_RTOL, atol=0.0):
        raise DomainError(f"schedule was built for ratios {schedule.ratios}, "
                          f"not {ratios}; time units do not match")


def _rotate(x: np.ndarray, l: int, angle: float) -> np.ndarray:
    a, b = 2 * l - 1, 2 * l
    c, s = math.cos(angle), math.sin(angle)
    x = x.copy()
    x[a], x[b] = c * x[a] - s * x[b], s * x[a] + c * x[b]
    return x


def simulate_schedule(schedule: PulseSchedule, ratios: Sequence[float], x0,
                      target=None, record: bool = False,
                      max_step: float = SIM_STEP) -> TransferReport:
    """Integrate the chain system with couplings ``ratios`` under ``schedule``."""
    ks = np.array([float(k) for k in ratios])
    dim = 2 * ks.size
    x = np.array(x0, dtype=float)
    if x.shape != (dim,):
        raise DomainError(f"initial state must have {dim} components, got shape {x.shape}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-9:
        raise DomainError("initial state must have unit norm")
    if target is None:
        target = np.zeros(dim)
        target[-1] = 1.0
    target = np.array(target, dtype=float)
    if target.shape != (dim,):
        raise DomainError(f"target must have {dim} components, got shape {target.shape}")
    _check_ratios(schedule, tuple(ks))
    if schedule.max_control_index > ks.size - 1:
        raise DomainError(f"control index {schedule.max_control_index} is invalid for a chain "
                          f"with {ks.size + 1} spins")

    initial = x.copy()
    times: list = [schedule.start]
    states: list = [x.copy()]
    for seg in schedule.segments:
        if isinstance(seg, HardRotation):
            if seg.modeled:
                x = _rotate(x, seg.control_index, seg.angle)
                if record:
                    times.append(seg.time)
                    states.append(x.copy())
            continue
        if seg.times.size < 2:
            continue
        dt = seg.spacing
        nsub = max(1, math.ceil(dt / max_step - 1e-9))
        path = kernels.chain_segment(x, ks, seg.control_index, np.ascontiguousarray(seg.u), dt, nsub)
        if not np.all(np.isfinite(path[-1])):
            raise DomainError("simulation produced non-finite states")
        x = path[-1].copy()
        if record:
            times.extend(seg.times[1:])
            states.extend(path[1:])
    fidelity = float(np.clip(np.dot(x, target), -1.0, 1.0))
    return TransferReport(initial, x, target, fidelity, schedule.total_duration,
                          np.array(times) if record else None,
                          np.array(states) if record else None)


def simulate_full(schedule: PulseSchedule, k: float, x0=(1.0, 0.0, 0.0, 0.0),
                  target=None, record: bool = False) -> TransferReport:
    """Verify a schedule on the four-dimensional system with ratio ``k``."""
    if not (math.isfinite(k) and k > 0.0):
        raise DomainError(f"k must be positive, got {k!r}")
    return simulate_schedule(schedule, (1.0, float(k)), x0, target, record)


def full_target(beta: float) -> np.ndarray:
    return np.array([0.0, 0.0, math.cos(beta), math.sin(beta)])


# --------------------------------------------------------------- file I/O

def _decimate(seg: SoftSegment, points: int) -> SoftSegment:
    if points is None or seg.times.size <= points:
        return seg
    times = np.linspace(seg.start, seg.end, points)
    times[-1] = seg.end
    return SoftSegment(times, np.interp(times, seg.times, seg.u), seg.control_index)


def schedule_to_csv(schedule: PulseSchedule, points_per_segment: Optional[int] = EXPORT_POINTS) -> str:
    """CSV text; hard rotations become ``t,delta(angle),l`` rows.

    Unmodeled local rotations are not exported.
    """
    if points_per_segment is not None and points_per_segment < 2:
        raise DomainError("need at least 2 points per segment")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for seg in schedule.segments:
        if isinstance(seg, HardRotation):
            if seg.modeled:
                writer.writerow((_fmt(seg.time), f"delta({_fmt(seg.angle)})", seg.control_index))
            continue
        seg = _decimate(seg, points_per_segment)
        for t, u in zip(seg.times, seg.u):
            writer.writerow((_fmt(t), _fmt(u), seg.control_index))
    return buf.getvalue()


def write_pulse_csv(schedule: PulseSchedule, path,
                    points_per_segment: Optional[int] = EXPORT_POINTS) -> None:
    Path(path).write_text(schedule_to_csv(schedule, points_per_segment))


_DELTA = re.compile(r"^delta\((.+)\)$")


def _number(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", line=line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite", line=line)
    return value


def parse_pulse_csv(text: str) -> PulseSchedule:
    """Inverse of :func:`schedule_to_csv`; soft samples must be uniformly spaced."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}", line=1)
    segments: list = []
    cur_t: list = []
    cur_u: list = []
    cur_idx = None
    cur_line = 0

    def flush():
        nonlocal cur_t, cur_u, cur_idx
        if cur_idx is None:
            return
        t = np.array(cur_t)
        if t.size > 2:
            d = np.diff(t)
            if np.max(np.abs(d - d.mean())) > 1e-9 * max(1.0, abs(t[-1])):
                raise ParseError("samples of a segment must be uniformly spaced", line=cur_line)
        try:
            segments.append(SoftSegment(t, np.array(cur_u), cur_idx))
        except DomainError as exc:
            raise ParseError(str(exc), line=cur_line) from None
        cur_t, cur_u, cur_idx = [], [], None

    last_t = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        t = _number(row[0].strip(), "time", lineno)
        try:
            idx = int(row[2].strip())
        except ValueError:
            raise ParseError(f"control index {row[2].strip()!r} is not an integer", line=lineno) from None
        if idx < 0:
            raise ParseError("control index must be >= 0", line=lineno)
        if last_t is not None and t < last_t:
            raise ParseError(f"time {t!r} goes backwards", line=lineno)
        m = _DELTA.match(row[1].strip())
        if m:
            flush()
            if idx < 1:
                raise ParseError("hard rotations need a control index >= 1", line=lineno)
            segments.append(HardRotation(t, _number(m.group(1), "angle", lineno), idx))
        else:
            u = _number(row[1].strip(), "amplitude", lineno)
            if cur_idx is not None and (idx != cur_idx or t == cur_t[-1]):
                flush()
            if cur_idx is None:
                cur_idx, cur_line = idx, lineno
            elif t <= cur_t[-1]:
                raise ParseError("sample times must be strictly increasing", line=lineno)
            cur_t.append(t)
            cur_u.append(u)
        last_t = t
    flush()
    try:
        return PulseSchedule(tuple(segments))
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def read_pulse_csv(path) -> PulseSchedule:
    return parse_pulse_csv(Path(path).read_text())


__all__ = [
    "SoftSegment", "HardRotation", "PulseSchedule", "TransferReport", "reconstruct_control",
    "conventional_sequence", "conventional_chain_sequence", "simulate_schedule",
    "simulate_full", "full_target", "schedule_to_csv", "write_pulse_csv",
    "parse_pulse_csv", "read_pulse_csv",
]
