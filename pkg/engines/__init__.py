"""Fidelity engines.

Exact engines (brute force, Binder transfer matrix) return Z and the boundary
correlator; the Monte Carlo engine estimates the correlator for real couplings.
"""

from .base import ALL_PATTERNS, REDUCED_PATTERNS, BaseEngine, ExactEngine, assemble_amplitudes, assemble_full
from .binder import BinderEngine, binder_fidelity, binder_partition
from .brute_force import BruteForceEngine, brute_force
from .monte_carlo import (
    MetropolisChain,
    MonteCarloEngine,
    estimate_fidelity,
    metropolis_acceptance,
    metropolis_sweep,
    run_sweep,
)

__all__ = [
    "ALL_PATTERNS",
    "REDUCED_PATTERNS",
    "BaseEngine",
    "BinderEngine",
    "BruteForceEngine",
    "ExactEngine",
    "MetropolisChain",
    "MonteCarloEngine",
    "assemble_amplitudes",
    "assemble_full",
    "binder_fidelity",
    "binder_partition",
    "brute_force",
    "estimate_fidelity",
    "metropolis_acceptance",
    "metropolis_sweep",
    "run_sweep",
]
