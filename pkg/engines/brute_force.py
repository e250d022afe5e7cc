"""Exhaustive enumeration of mass-field configurations for small lattices."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from constants import BRUTE_FORCE_CHUNK_BITS, BRUTE_FORCE_MAX_VARIABLES
from engines.base import ALL_PATTERNS, ExactEngine, assemble_full
from errors import TooLarge
from lattice import SurfaceGeometry
from models import AmplitudePair, EngineKind, ModelCouplings, ObservableReport
from utils import config_section


@dataclass
class _Moments:
    """Running sums of w, w E and w E^2 with w stored relative to exp(scale)."""

    scale: float = -math.inf
    sums: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.complex128))

    def add(self, exponents: np.ndarray, energies: np.ndarray) -> None:
        top = float(exponents.real.max())
        if top > self.scale:
            self.sums *= math.exp(self.scale - top)
            self.scale = top
        w = np.exp(exponents - self.scale)
        self.sums += (w.sum(), (w * energies).sum(), (w * energies * energies).sum())

    def rescaled(self, scale: float) -> np.ndarray:
        return self.sums * math.exp(self.scale - scale)


class BruteForceEngine(ExactEngine):
    """
    Sums exp(-xi E) over every mass-field configuration.

    The four boundary fields are fixed per pattern and the 2P plaquette
    variables are enumerated in numpy batches of 2**chunk_bits states.
    Also handles the Ohmic long-range model, since the layer magnetizations
    come directly from each enumerated state.
    """

    kind = EngineKind.BRUTE

    def __init__(self, config: dict[str, Any] | None = None):
        super().__init__(config)
        section = config_section(self.config, "engines", "brute_force")
        self.max_variables = section.get("max_variables", BRUTE_FORCE_MAX_VARIABLES)
        self.chunk_bits = section.get("chunk_bits", BRUTE_FORCE_CHUNK_BITS)

    def _moments(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> dict:
        if geom.n_variables > self.max_variables:
            raise TooLarge(
                f"{geom!r} has {geom.n_variables} variables, brute-force budget is "
                f"{self.max_variables}"
            )
        terms = geom.terms
        coupling = model.coupling
        n_mass = 2 * geom.n_plaquettes
        chunk = 1 << min(self.chunk_bits, n_mass)
        shifts = np.arange(n_mass, dtype=np.int64)
        f_ratio, phi_ratio = model.f_bar_ratio, model.phi_bar_ratio

        moments = {}
        for pattern in ALL_PATTERNS:
            acc = _Moments()
            boundary = np.array(pattern, dtype=np.int8)
            for start in range(0, 1 << n_mass, chunk):
                codes = np.arange(start, start + chunk, dtype=np.int64)
                bits = (codes[:, None] >> shifts) & 1
                states = np.empty((chunk, geom.n_variables), dtype=np.int8)
                states[:, :n_mass] = 1 - 2 * bits
                states[:, n_mass:] = boundary
                energies = terms.energies(states, coupling)
                if model.variant.is_long_range:
                    m_sigma = states[:, geom.sigma_vars].prod(axis=2).sum(axis=1)
                    m_tau = states[:, geom.tau_vars].prod(axis=2).sum(axis=1)
                    diff = (m_sigma - m_tau).astype(np.float64)
                    energies = energies + 0.25 * diff * (
                        f_ratio * diff + 1j * phi_ratio * (m_sigma + m_tau)
                    )
                acc.add(-xi * energies, energies)
            moments[pattern] = acc
        self.logger.debug(f"Enumerated {16 << n_mass} states of {geom!r} at xi={xi}")
        return moments

    def amplitudes(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> AmplitudePair:
        moments = self._moments(geom, model, xi)
        scale = max(m.scale for m in moments.values())
        c_table = {p: complex(m.rescaled(scale)[0]) for p, m in moments.items()}
        return assemble_full(c_table, scale)

    def observables(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> ObservableReport:
        """Observables from exact moments: E = <E>, C = xi^2 (<E^2> - <E>^2)."""
        self._check_xi(xi)
        moments = self._moments(geom, model, xi)
        scale = max(m.scale for m in moments.values())
        totals = sum(m.rescaled(scale) for m in moments.values())
        c_table = {p: complex(m.rescaled(scale)[0]) for p, m in moments.items()}
        pair = assemble_full(c_table, scale)
        mean = totals[1] / totals[0]
        square = totals[2] / totals[0]
        return self._report(pair, complex(mean), complex(xi**2 * (square - mean * mean)), [])


def brute_force(geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> AmplitudePair:
    """Z and the boundary correlator by exhaustive enumeration."""
    BruteForceEngine._check_xi(xi)
    return BruteForceEngine().amplitudes(geom, model, xi)
