"""Base classes shared by the fidelity engines."""

import itertools
import logging
import math
from typing import Any

from constants import (
    B_CORR_VALIDITY_TOL,
    FINITE_DIFF_MIN_STEP,
    FINITE_DIFF_REL_STEP,
    REALNESS_TOL,
    RICHARDSON_TRIGGER,
)
from lattice import SurfaceGeometry
from models import (
    AmplitudePair,
    BoundaryPattern,
    EngineKind,
    FidelityEstimate,
    ModelCouplings,
    ObservableReport,
)
from utils import config_section

ALL_PATTERNS: list[BoundaryPattern] = list(itertools.product((1, -1), repeat=4))

# Representatives left after time reversal, layer conjugation and up-down
# reflection, with their multiplicity in Z (the remaining patterns mirror them)
REDUCED_PATTERNS: dict[BoundaryPattern, int] = {
    (1, 1, 1, 1): 1,
    (1, 1, 1, -1): 2,
    (1, -1, 1, 1): 2,
    (1, 1, -1, -1): 1,
    (1, -1, 1, -1): 1,
    (1, -1, -1, 1): 1,
}


def pattern_sign(pattern: BoundaryPattern) -> int:
    """alpha_t alpha_b beta_t beta_b, the boundary correlator of a pattern."""
    return math.prod(pattern)


def assemble_amplitudes(c_table: dict[BoundaryPattern, complex], log_scale: float) -> AmplitudePair:
    """
    Z and the boundary correlator from the boundary-pattern amplitudes c.

    Uses the six representatives:
        Z = 2[c(++++) + 2c(+++-) + 2c(+-++) + c(++--) + c(+-+-) + c(+--+)]
        B = (2/Z)[c(++++) - 2c(+++-) - 2c(+-++) + c(++--) + c(+-+-) + c(+--+)]
    """
    z = 2.0 * sum(mult * c_table[p] for p, mult in REDUCED_PATTERNS.items())
    signed = 2.0 * sum(mult * pattern_sign(p) * c_table[p] for p, mult in REDUCED_PATTERNS.items())
    return AmplitudePair(z=complex(z), b_corr=complex(signed / z), c_table=dict(c_table), log_scale=log_scale)


def assemble_full(c_table: dict[BoundaryPattern, complex], log_scale: float) -> AmplitudePair:
    """Z and the boundary correlator summed over all sixteen patterns."""
    z = sum(c_table[p] for p in ALL_PATTERNS)
    signed = sum(pattern_sign(p) * c_table[p] for p in ALL_PATTERNS)
    return AmplitudePair(z=complex(z), b_corr=complex(signed / z), c_table=dict(c_table), log_scale=log_scale)


class BaseEngine:
    """Base class for all fidelity engines with shared configuration."""

    kind: EngineKind

    def __init__(self, config: dict[str, Any] | None = None):
        """
        Initialize the engine.

        Args:
            config: Configuration dictionary from config.yaml
        """
        self.config = config or {}
        self.logger = logging.getLogger(self.__class__.__name__)

    def fidelity(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> FidelityEstimate:
        raise NotImplementedError

    @staticmethod
    def _check_xi(xi: float) -> None:
        if xi < 0 or not math.isfinite(xi):
            raise ValueError(f"xi must be finite and >= 0, got {xi}")


class ExactEngine(BaseEngine):
    """Engines that compute the boundary-pattern amplitudes exactly."""

    def __init__(self, config: dict[str, Any] | None = None):
        super().__init__(config)
        section = config_section(self.config, "engines", "finite_difference")
        self.relative_step = section.get("relative_step", FINITE_DIFF_REL_STEP)
        self.min_step = section.get("min_step", FINITE_DIFF_MIN_STEP)
        self.richardson_trigger = section.get("richardson_trigger", RICHARDSON_TRIGGER)

    def amplitudes(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> AmplitudePair:
        """Z and the boundary correlator at one xi."""
        raise NotImplementedError

    def _ln_z(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> float:
        return self.amplitudes(geom, model, xi).ln_z

    def observables(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> ObservableReport:
        """
        Fidelity, energy and heat capacity at one xi.

        E = -d ln Z / d xi and C = -xi^2 dE/d xi by central differences with a
        relative step; Richardson extrapolation takes over when the h and 2h
        second differences disagree.
        """
        self._check_xi(xi)
        pair = self.amplitudes(geom, model, xi)
        h = self.relative_step * xi if xi > 0 else self.min_step

        ln = {k: self._ln_z(geom, model, xi + k * h) for k in (-2, -1, 1, 2)}
        ln[0] = pair.ln_z
        energy = -(ln[1] - ln[-1]) / (2 * h)
        second_h = (ln[1] - 2 * ln[0] + ln[-1]) / h**2
        second_2h = (ln[2] - 2 * ln[0] + ln[-2]) / (4 * h**2)
        second = second_h
        notes: list[str] = []
        if abs(second_h - second_2h) > self.richardson_trigger * max(abs(second_h), 1e-12):
            second = (4 * second_h - second_2h) / 3
            notes.append("heat capacity from Richardson extrapolation")
        return self._report(pair, energy, xi**2 * second, notes)

    def _report(self, pair: AmplitudePair, energy: complex, heat: complex, notes: list[str]) -> ObservableReport:
        valid = True
        if pair.imag_fraction > REALNESS_TOL:
            notes.append(f"|Im Z|/|Z| = {pair.imag_fraction:.2e}")
            valid = False
        if abs(pair.b_corr.imag) > B_CORR_VALIDITY_TOL:
            notes.append(f"Im B = {pair.b_corr.imag:.2e}")
            valid = False
        if pair.z.real <= 0:
            notes.append("Re Z is not positive")
            valid = False
        if not valid:
            self.logger.warning(f"Observables flagged invalid: {'; '.join(notes)}")
        return ObservableReport(
            fidelity=pair.fidelity,
            energy=energy,
            heat_capacity=heat,
            b_corr=pair.b_corr,
            valid=valid,
            notes=notes,
        )

    def fidelity(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> FidelityEstimate:
        self._check_xi(xi)
        pair = self.amplitudes(geom, model, xi)
        valid = pair.imag_fraction <= REALNESS_TOL and abs(pair.b_corr.imag) <= B_CORR_VALIDITY_TOL
        if not valid:
            self.logger.warning(
                f"{geom!r} xi={xi}: |Im Z|/|Z| = {pair.imag_fraction:.2e}, "
                f"Im B = {pair.b_corr.imag:.2e}"
            )
        return FidelityEstimate(
            fidelity=pair.fidelity,
            stderr=0.0,
            b_corr_mean=pair.b_corr.real,
            b_corr_stderr=0.0,
            acceptance_rate=1.0,
            method=self.kind,
            size=geom.size,
            xi=xi,
            valid=valid,
        )
