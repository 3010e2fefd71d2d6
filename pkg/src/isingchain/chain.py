"""Spin chains, coupling normalization and time-unit conversion.

Couplings are given in Hz as J/(2*pi). Every solver works in dimensionless
time measured in units of 1/J_ref, where J_ref = 2*pi*ref_hz is the angular
frequency of the chosen reference coupling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, ParseError

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class ChainSpec:
    """Nearest-neighbour Ising couplings of an n-spin chain, in Hz."""

    couplings_hz: tuple[float, ...]

    def __post_init__(self):
        couplings = tuple(float(c) for c in self.couplings_hz)
        if not couplings:
            raise DomainError("a chain needs at least one coupling (n >= 2 spins)")
        for i, c in enumerate(couplings):
            if not math.isfinite(c) or c <= 0.0:
                raise DomainError(f"coupling {i} must be positive and finite, got {c!r}")
        object.__setattr__(self, "couplings_hz", couplings)

    @property
    def n_spins(self) -> int:
        return len(self.couplings_hz) + 1

    def scaled(self, factor: float) -> "ChainSpec":
        return ChainSpec(tuple(factor * c for c in self.couplings_hz))


@dataclass(frozen=True)
class NormalizedChain:
    """Coupling ratios k_l = J_l / J_ref plus the reference coupling in Hz."""

    ratios: tuple[float, ...]
    ref_index: int
    ref_hz: float

    def __post_init__(self):
        ratios = tuple(float(k) for k in self.ratios)
        if not ratios:
            raise DomainError("a chain needs at least one coupling ratio")
        for i, k in enumerate(ratios):
            if not math.isfinite(k) or k <= 0.0:
                raise DomainError(f"ratio {i} must be positive and finite, got {k!r}")
        if not 0 <= self.ref_index < len(ratios):
            raise DomainError(f"ref_index {self.ref_index} out of range for {len(ratios)} couplings")
        if ratios[self.ref_index] != 1.0:
            raise DomainError("the reference ratio must be exactly 1")
        if not math.isfinite(self.ref_hz) or self.ref_hz <= 0.0:
            raise DomainError(f"ref_hz must be positive, got {self.ref_hz!r}")
        object.__setattr__(self, "ratios", ratios)

    @property
    def n_spins(self) -> int:
        return len(self.ratios) + 1

    @property
    def state_dim(self) -> int:
        return 2 * len(self.ratios)

    def conventional_time(self) -> float:
        """Hard-pulse baseline, sum of quarter periods pi/(2 k_l)."""
        return math.fsum(HALF_PI / k for k in self.ratios)

    def to_spec(self) -> ChainSpec:
        return ChainSpec(tuple(self.ref_hz * k for k in self.ratios))


@dataclass(frozen=True)
class TransferEndpoints:
    """Boundary angles: start (cos a, sin a, 0, 0), target (0, 0, cos b, sin b)."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0 or value > HALF_PI:
                raise DomainError(f"{name} must lie in [0, pi/2], got {value!r}")
            object.__setattr__(self, name, value)


def normalize_chain(spec: ChainSpec, ref_index: int = 0) -> NormalizedChain:
    couplings = spec.couplings_hz
    if not 0 <= ref_index < len(couplings):
        raise DomainError(f"ref_index {ref_index} out of range for {len(couplings)} couplings")
    ref = couplings[ref_index]
    ratios = tuple(1.0 if i == ref_index else c / ref for i, c in enumerate(couplings))
    return NormalizedChain(ratios, ref_index, ref)


def dimensionless_to_seconds(tau: float, chain: NormalizedChain) -> float:
    if not tau >= 0.0:
        raise DomainError(f"dimensionless time must be non-negative, got {tau!r}")
    return tau / (2.0 * math.pi * chain.ref_hz)


def seconds_to_dimensionless(seconds: float, chain: NormalizedChain) -> float:
    if not seconds >= 0.0:
        raise DomainError(f"time must be non-negative, got {seconds!r}")
    return seconds * (2.0 * math.pi * chain.ref_hz)


def load_chain(path) -> ChainSpec:
    """Read ``{"couplings_hz": [...]}``."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict) or "couplings_hz" not in data:
        raise ParseError('chain file must be an object with a "couplings_hz" list')
    values = data["couplings_hz"]
    if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ParseError('"couplings_hz" must be a list of numbers')
    return ChainSpec(tuple(float(v) for v in values))


def dump_chain(spec: ChainSpec, path) -> None:
    Path(path).write_text(json.dumps({"couplings_hz": list(spec.couplings_hz)}) + "\n")
