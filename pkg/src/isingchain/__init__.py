"""Time-optimal pulse synthesis for Ising spin chains with unequal couplings."""
from ._accel import backend
from .chain import (ChainSpec, NormalizedChain, TransferEndpoints, dimensionless_to_seconds,
                    load_chain, normalize_chain, seconds_to_dimensionless)
from .errors import (DomainError, IntegrationError, IsingChainError, ParseError,
                     SegmentSolveError, UnreachableTargetError)
from .geodesic import GeodesicSolution, elliptic_time, eta, minimal_time, shoot
from .pulse import (PulseSchedule, TransferReport, conventional_sequence, reconstruct_control,
                    simulate_full)

__version__ = "0.1.0"
