"""Metropolis sampling of the mass-field model for real couplings.

A sweep visits every plaquette variable (mu then nu) followed by the four
boundary fields. Energy changes come from the term incidence of the flipped
variable; for the Ohmic model the layer magnetizations are carried along so
the long-range change costs O(1) per flipped qubit.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from numba import njit

from constants import (
    CACHE_CHECK_INTERVAL,
    DEFAULT_N_SWEEPS,
    MC_BLOCK_SWEEPS,
    NON_ERGODIC_SIGMAS,
    TRACE_DTYPE,
)
from engines.base import BaseEngine
from errors import CacheMismatch, ComplexCouplingRejected, NonErgodicWarning
from lattice import SurfaceGeometry
from models import EngineKind, FidelityEstimate, MassFieldConfig, McSchedule, ModelCouplings
from utils import config_section


@njit(cache=True, nogil=True)
def _run_block(
    state,
    sigma,
    tau,
    mags,
    energy,
    term_vars,
    term_coef,
    var_offsets,
    var_terms,
    qubit_offsets,
    qubit_list,
    var_layer,
    f_ratio,
    xi,
    n_sweeps,
    sweep_offset,
    n_burn,
    stride,
    obs_out,
    energy_out,
    n_recorded,
    rng,
):
    """Run n_sweeps sweeps in place; returns (accepted, n_recorded, energy)."""
    n_vars = state.shape[0] - 1
    accepted = 0
    for sweep in range(n_sweeps):
        for v in range(n_vars):
            local = 0.0
            for idx in range(var_offsets[v], var_offsets[v + 1]):
                t = var_terms[idx]
                product = 1
                for slot in range(term_vars.shape[1]):
                    product *= state[term_vars[t, slot]]
                local += term_coef[t] * product
            delta = -2.0 * local

            layer = var_layer[v]
            change = 0
            for idx in range(qubit_offsets[v], qubit_offsets[v + 1]):
                q = qubit_list[idx]
                change -= 2 * (sigma[q] if layer == 0 else tau[q])
            if f_ratio != 0.0:
                old = mags[0] - mags[1]
                new = old + change if layer == 0 else old - change
                delta += 0.25 * f_ratio * (new * new - old * old)

            if delta <= 0.0 or rng.random() < math.exp(-xi * delta):
                state[v] = -state[v]
                energy += delta
                accepted += 1
                for idx in range(qubit_offsets[v], qubit_offsets[v + 1]):
                    q = qubit_list[idx]
                    if layer == 0:
                        sigma[q] = -sigma[q]
                    else:
                        tau[q] = -tau[q]
                mags[layer] += change

        done = sweep_offset + sweep + 1
        if done > n_burn and (done - n_burn) % stride == 0:
            observable = 1
            for b in range(n_vars - 4, n_vars):
                observable *= state[b]
            obs_out[n_recorded] = observable
            energy_out[n_recorded] = energy
            n_recorded += 1
    return accepted, n_recorded, energy


def metropolis_acceptance(delta: float, xi: float) -> float:
    """Probability of accepting a move that changes the energy by delta."""
    return 1.0 if delta <= 0 else math.exp(-xi * delta)


class MetropolisChain:
    """
    Mutable Markov chain over mass-field configurations at fixed xi.

    Usage:
        chain = MetropolisChain(geom, model, xi, rng)
        chain.run(1000)
    """

    def __init__(
        self,
        geom: SurfaceGeometry,
        model: ModelCouplings,
        xi: float,
        rng: np.random.Generator,
        initial: MassFieldConfig | None = None,
    ):
        if not model.is_real:
            raise ComplexCouplingRejected(
                "complex Boltzmann weights cannot be sampled; use the Binder engine"
            )
        self.geom = geom
        self.model = model
        self.xi = xi
        self.rng = rng

        terms = geom.terms
        self.coupling = model.coupling
        self.term_vars = terms.padded_variables
        self.term_coef = np.ascontiguousarray(terms.coefficients(self.coupling).real)
        self.qubit_offsets, self.qubit_list = geom.qubit_incidence
        self.var_layer = np.array(
            [geom.variable_layer(v) for v in range(geom.n_variables)], dtype=np.int8
        )
        self.f_ratio = float(model.f_bar_ratio)

        if initial is None:
            initial = MassFieldConfig.random(geom.n_plaquettes, rng)
        self.state = np.ones(geom.n_variables + 1, dtype=np.int8)
        self.state[:-1] = geom.state_vector(initial)
        sigma, tau = geom.spins_from_vector(self.state[:-1])
        self.sigma = sigma.astype(np.int8)
        self.tau = tau.astype(np.int8)
        self.mags = np.array([self.sigma.sum(), self.tau.sum()], dtype=np.int64)
        self.energy = self.full_energy()
        self.sweeps = 0
        self.accepted = 0

    @property
    def config(self) -> MassFieldConfig:
        return MassFieldConfig.from_vector(self.state[:-1].copy())

    def full_energy(self) -> float:
        """Energy recomputed from scratch (normalized units)."""
        energy = self.geom.terms.energies(self.state[:-1], self.coupling)[0].real
        diff = float(self.mags[0] - self.mags[1])
        return float(energy + 0.25 * self.f_ratio * diff * diff)

    def check_cache(self) -> None:
        """Compare carried spins and magnetizations with a recount."""
        sigma, tau = self.geom.spins_from_vector(self.state[:-1])
        if not (np.array_equal(sigma, self.sigma) and np.array_equal(tau, self.tau)):
            raise CacheMismatch(f"carried qubit spins drifted after {self.sweeps} sweeps")
        if (int(sigma.sum()), int(tau.sum())) != (int(self.mags[0]), int(self.mags[1])):
            raise CacheMismatch(
                f"cached magnetizations {tuple(self.mags)} != recount "
                f"({int(sigma.sum())}, {int(tau.sum())})"
            )

    def run(
        self,
        n_sweeps: int,
        n_burn: int | None = None,
        stride: int = 1,
        obs_out: np.ndarray | None = None,
        energy_out: np.ndarray | None = None,
        n_recorded: int = 0,
    ) -> int:
        """
        Advance the chain by n_sweeps sweeps.

        Measurements are written once the chain's total sweep count passes
        n_burn; returns the updated number of recorded measurements.
        """
        if obs_out is None:
            obs_out = np.zeros(0, dtype=np.int8)
            energy_out = np.zeros(0, dtype=np.float64)
            n_burn = np.iinfo(np.int64).max // 2
        accepted, n_recorded, self.energy = _run_block(
            self.state,
            self.sigma,
            self.tau,
            self.mags,
            self.energy,
            self.term_vars,
            self.term_coef,
            self.geom.terms.var_offsets,
            self.geom.terms.var_terms,
            self.qubit_offsets,
            self.qubit_list,
            self.var_layer,
            self.f_ratio,
            float(self.xi),
            int(n_sweeps),
            int(self.sweeps),
            int(n_burn if n_burn is not None else 0),
            int(stride),
            obs_out,
            energy_out,
            int(n_recorded),
            self.rng,
        )
        self.sweeps += n_sweeps
        self.accepted += accepted
        return n_recorded

    @property
    def acceptance_rate(self) -> float:
        moves = self.sweeps * self.geom.n_variables
        return self.accepted / moves if moves else 0.0


class MonteCarloEngine(BaseEngine):
    """
    Fidelity estimates from binned Metropolis measurements.

    Features:
    - Deterministic per-point streams from (seed, nx, ny, xi index)
    - Optional warm start along a size's xi grid
    - Optional binary trace of every measurement
    - Debug recount of the carried magnetizations
    """

    kind = EngineKind.MC

    def __init__(self, config: dict[str, Any] | None = None):
        super().__init__(config)
        section = config_section(self.config, "monte_carlo")
        self.block_sweeps = section.get("block_sweeps", MC_BLOCK_SWEEPS)
        self.non_ergodic_sigmas = section.get("non_ergodic_sigmas", NON_ERGODIC_SIGMAS)
        self.debug = section.get("debug", False)
        self.cache_check_interval = section.get("cache_check_interval", CACHE_CHECK_INTERVAL)

    def default_schedule(self, seed: int | None = None) -> McSchedule:
        section = config_section(self.config, "monte_carlo")
        fields = {k: section[k] for k in ("n_sweeps", "n_bins", "measure_stride") if k in section}
        if "burn_fraction" in section:
            fields["n_burn"] = int(section["burn_fraction"] * fields.get("n_sweeps", DEFAULT_N_SWEEPS))
        if seed is not None:
            fields["seed"] = seed
        return McSchedule(**fields)

    @staticmethod
    def stream(seed: int, *key: int) -> np.random.Generator:
        """Independent generator for one chain."""
        return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))

    def estimate(
        self,
        geom: SurfaceGeometry,
        model: ModelCouplings,
        xi: float,
        schedule: McSchedule,
        rng: np.random.Generator | None = None,
        initial: MassFieldConfig | None = None,
        xi_index: int = 0,
    ) -> tuple[FidelityEstimate, MassFieldConfig]:
        """
        Run one chain and reduce its measurements to a fidelity estimate.

        Returns:
            The estimate and the chain's final configuration

        Raises:
            ComplexCouplingRejected: the couplings have an imaginary part
        """
        self._check_xi(xi)
        if rng is None:
            rng = self.stream(schedule.seed, geom.nx, geom.ny, xi_index)
        chain = MetropolisChain(geom, model, xi, rng, initial)

        n_meas = schedule.n_measurements
        observables = np.zeros(n_meas, dtype=np.int8)
        energies = np.zeros(n_meas, dtype=np.float64)
        block = self.cache_check_interval if self.debug else self.block_sweeps
        recorded = 0
        while chain.sweeps < schedule.n_sweeps:
            n = min(block, schedule.n_sweeps - chain.sweeps)
            recorded = chain.run(
                n, schedule.n_burn, schedule.measure_stride, observables, energies, recorded
            )
            if self.debug:
                chain.check_cache()

        if schedule.trace_path:
            self._write_trace(schedule, geom, xi_index, observables[:recorded], energies[:recorded])

        estimate = self._reduce(observables[:recorded], schedule.n_bins, geom, xi)
        estimate.acceptance_rate = chain.acceptance_rate
        estimate.seed = schedule.seed
        self.logger.debug(
            f"{geom!r} xi={xi:.6g}: F={estimate.fidelity:.6f} +- {estimate.stderr:.2e}, "
            f"acceptance {estimate.acceptance_rate:.3f}"
        )
        return estimate, chain.config

    def _reduce(
        self, observables: np.ndarray, n_bins: int, geom: SurfaceGeometry, xi: float
    ) -> FidelityEstimate:
        bin_size = observables.size // n_bins
        bins = observables[: bin_size * n_bins].astype(np.float64).reshape(n_bins, bin_size).mean(axis=1)
        b_mean = float(bins.mean())
        b_err = float(bins.std(ddof=1) / math.sqrt(n_bins))

        spread = float(bins.std(ddof=1))
        if spread > 0 and np.any(np.abs(bins - b_mean) > self.non_ergodic_sigmas * spread):
            warnings.warn(
                f"{geom!r} xi={xi:.6g}: a bin mean lies beyond "
                f"{self.non_ergodic_sigmas} standard deviations",
                NonErgodicWarning,
                stacklevel=3,
            )

        valid = 1.0 + b_mean > 0
        fidelity = 1.0 / (1.0 + b_mean) if valid else math.inf
        stderr = b_err / (1.0 + b_mean) ** 2 if valid else math.inf
        return FidelityEstimate(
            fidelity=fidelity,
            stderr=stderr,
            b_corr_mean=b_mean,
            b_corr_stderr=b_err,
            acceptance_rate=0.0,
            method=self.kind,
            size=geom.size,
            xi=xi,
            valid=valid,
        )

    def _write_trace(
        self,
        schedule: McSchedule,
        geom: SurfaceGeometry,
        xi_index: int,
        observables: np.ndarray,
        energies: np.ndarray,
    ) -> None:
        directory = Path(schedule.trace_path)
        directory.mkdir(parents=True, exist_ok=True)
        records = np.zeros(observables.size, dtype=TRACE_DTYPE)
        first = (schedule.n_burn or 0) + schedule.measure_stride
        records["sweep"] = first + schedule.measure_stride * np.arange(observables.size)
        records["observable"] = observables
        records["energy"] = energies
        path = directory / f"trace_{geom.nx}x{geom.ny}_{xi_index:04d}.bin"
        with open(path, "ab") as f:
            records.tofile(f)
        self.logger.debug(f"Appended {records.size} trace records to {path}")

    def fidelity(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> FidelityEstimate:
        return self.estimate(geom, model, xi, self.default_schedule())[0]

    def run_sweep(
        self,
        geoms: list[SurfaceGeometry],
        model: ModelCouplings,
        xi_grid: list[float],
        schedule: McSchedule,
        warm_start: bool = False,
        threads: int = 1,
    ) -> list[FidelityEstimate]:
        """
        Estimates for every (size, xi), ordered by size then xi.

        Without warm start every point runs on its own stream and points are
        spread over a thread pool; with warm start each size runs its grid in
        order, seeding each chain with the previous final configuration.
        """
        xi_grid = sorted(xi_grid)

        def run_size(geom: SurfaceGeometry) -> list[FidelityEstimate]:
            rng = self.stream(schedule.seed, geom.nx, geom.ny)
            previous = None
            results = []
            for index, xi in enumerate(xi_grid):
                estimate, previous = self.estimate(
                    geom, model, xi, schedule, rng=rng, initial=previous, xi_index=index
                )
                results.append(estimate)
            return results

        def run_point(task: tuple[SurfaceGeometry, int]) -> FidelityEstimate:
            geom, index = task
            return self.estimate(geom, model, xi_grid[index], schedule, xi_index=index)[0]

        with ThreadPoolExecutor(max_workers=threads) as pool:
            if warm_start:
                batches = list(pool.map(run_size, geoms))
                estimates = [e for batch in batches for e in batch]
            else:
                tasks = [(g, i) for g in geoms for i in range(len(xi_grid))]
                estimates = list(pool.map(run_point, tasks))

        self.logger.info(f"Finished {len(estimates)} Monte Carlo points")
        return sorted(estimates, key=lambda e: (e.size, e.xi))


def metropolis_sweep(
    geom: SurfaceGeometry,
    state: MassFieldConfig,
    model: ModelCouplings,
    xi: float,
    rng: np.random.Generator,
) -> tuple[MassFieldConfig, int]:
    """One sweep from state; returns the new state and the accepted moves."""
    chain = MetropolisChain(geom, model, xi, rng, state)
    chain.run(1)
    return chain.config, chain.accepted


def estimate_fidelity(
    geom: SurfaceGeometry, model: ModelCouplings, xi: float, schedule: McSchedule
) -> FidelityEstimate:
    return MonteCarloEngine().estimate(geom, model, xi, schedule)[0]


def run_sweep(
    geoms: list[SurfaceGeometry],
    model: ModelCouplings,
    xi_grid: list[float],
    schedule: McSchedule,
) -> list[FidelityEstimate]:
    return MonteCarloEngine().run_sweep(geoms, model, xi_grid, schedule)
