"""Parameter sweeps producing the figure datasets as CSV rows."""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .chain import HALF_PI, NormalizedChain
from .errors import DomainError, IsingChainError
from .geodesic import conventional_time, minimal_time
from .planner import objective_curve

KINDS = ("time_vs_k", "ratio_vs_k", "time_vs_k_beta", "time_vs_alpha_beta", "objective_vs_gamma")

# kind -> (grid parameters in row order, output columns)
LAYOUT = {
    "time_vs_k": (("k",), ("T",)),
    "ratio_vs_k": (("k",), ("T", "conventional", "eta")),
    "time_vs_k_beta": (("k", "beta"), ("T",)),
    "time_vs_alpha_beta": (("k", "alpha", "beta"), ("T",)),
    "objective_vs_gamma": (("gamma",), ("J",)),
}


@dataclass(frozen=True)
class SweepRequest:
    kind: str
    grids: dict
    chain: Optional[NormalizedChain] = None

    def __post_init__(self):
        if self.kind not in LAYOUT:
            raise DomainError(f"unknown sweep kind {self.kind!r}; choose from {', '.join(KINDS)}")
        params, _ = LAYOUT[self.kind]
        grids = {}
        for name in params:
            values = self.grids.get(name)
            if not values:
                raise DomainError(f"sweep {self.kind} needs a non-empty {name} grid")
            values = tuple(float(v) for v in values)
            for v in values:
                if name == "k":
                    if not (math.isfinite(v) and v > 0.0):
                        raise DomainError(f"k must be positive, got {v!r}")
                elif not 0.0 <= v <= HALF_PI:
                    raise DomainError(f"{name} must lie in [0, pi/2], got {v!r}")
            grids[name] = values
        object.__setattr__(self, "grids", grids)
        if self.kind == "objective_vs_gamma":
            if self.chain is None or self.chain.n_spins != 4:
                raise DomainError("objective_vs_gamma needs a 4-spin chain")

    @property
    def columns(self) -> tuple:
        params, outputs = LAYOUT[self.kind]
        return params + outputs + ("error",)

    def points(self) -> list:
        params, _ = LAYOUT[self.kind]
        return list(itertools.product(*(self.grids[name] for name in params)))


def _evaluate(kind, point, chain):
    try:
        if kind == "time_vs_k":
            return (minimal_time(point[0]),), ""
        if kind == "ratio_vs_k":
            t = minimal_time(point[0])
            conv = conventional_time(point[0])
            return (t, conv, t / conv), ""
        if kind == "time_vs_k_beta":
            return (minimal_time(point[0], 0.0, point[1]),), ""
        if kind == "time_vs_alpha_beta":
            return (minimal_time(*point),), ""
        return (objective_curve(chain, [point[0]])[0][1],), ""
    except IsingChainError as exc:
        n_out = len(LAYOUT[kind][1])
        return (math.nan,) * n_out, f"{type(exc).__name__}: {exc}"


def _evaluate_packed(args):
    return _evaluate(*args)


def run_sweep(req: SweepRequest, jobs: int = 1) -> list:
    """Rows in grid order; failed points carry NaN outputs and an error message."""
    tasks = [(req.kind, p, req.chain) for p in req.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_packed, tasks, chunksize=1))
    else:
        results = [_evaluate(*t) for t in tasks]
    return [tuple(p) + out + (err,) for p, (out, err) in zip(req.points(), results)]


def rows_to_csv(columns: Sequence[str], rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else format(float(v), ".17g") for v in row])
    return buf.getvalue()
