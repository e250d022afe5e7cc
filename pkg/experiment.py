"""Experiment orchestration: config parsing, engine choice, sweeps and outputs."""

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from analysis import critical_coupling, curves_from_estimates, find_crossing_from_config
from constants import (
    AUTO_BRUTE_MAX_VARIABLES,
    BINDER_MAX_WIDTH,
    CURVES_FILENAME,
    CURVES_HEADER,
    KERNELS_FILENAME,
    KERNELS_HEADER,
    OHMIC,
    PRESETS_DIR,
    THRESHOLD_FILENAME,
    VERSION,
)
from engines import BinderEngine, BruteForceEngine, MonteCarloEngine, assemble_full
from errors import ConfigError, EngineError, KernelError
from kernels import KernelEvaluator
from lattice import SurfaceGeometry, build_lattice
from models import (
    EngineKind,
    FidelityEstimate,
    MassFieldConfig,
    McSchedule,
    ModelCouplings,
    ModelVariant,
    RunConfig,
    ThresholdResult,
)
from spin_model import energy_super_imag, mass_to_spin, massfield_energy
from utils import config_section, format_real, parse_yaml

logger = logging.getLogger(__name__)

MERGED_SECTIONS = ("env", "schedule")


# =============================================================================
# Config parsing
# =============================================================================


def presets_dir(app_config: dict[str, Any] | None = None) -> Path:
    name = config_section(app_config or {}, "output").get("presets_dir", PRESETS_DIR)
    path = Path(name)
    return path if path.is_absolute() else Path(__file__).parent / path


def list_presets(app_config: dict[str, Any] | None = None) -> list[str]:
    return sorted(p.stem for p in presets_dir(app_config).glob("*.yaml"))


def load_preset(name: str, app_config: dict[str, Any] | None = None) -> dict[str, Any]:
    """Raw mapping of a preset shipped in presets/."""
    path = presets_dir(app_config) / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"Unknown preset '{name}'. Available: {', '.join(list_presets(app_config))}")
    data = parse_yaml(path.read_text(), str(path))
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if key in MERGED_SECTIONS and isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def parse_config(
    text: str = "",
    source: str = "<config>",
    overrides: dict[str, Any] | None = None,
    app_config: dict[str, Any] | None = None,
) -> RunConfig:
    """
    Parse a YAML run config into a validated RunConfig.

    A `preset` key (in the text or the overrides) loads presets/<name>.yaml
    first; the document and then the overrides are layered on top of it.

    Raises:
        ParseError: YAML syntax error, with line and column
        ConfigError: the document is not a mapping or names an unknown preset
        pydantic.ValidationError: a field is missing, unknown or invalid
    """
    data = parse_yaml(text, source) if text.strip() else {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    preset = overrides.get("preset") or data.get("preset")
    layered = load_preset(preset, app_config) if preset else {}
    if preset:
        layered["preset"] = preset
    layered = _merge(_merge(layered, data), overrides)

    grid_keys = {"gammas", "lambdas", "gamma_min", "gamma_max", "gamma_step"}
    if grid_keys & overrides.keys():
        # a grid given on the command line replaces any grid from the files
        for key in grid_keys - overrides.keys():
            layered.pop(key, None)

    ohmic = config_section(app_config or {}, "ohmic")
    for key in ("f_bar_ratio", "phi_bar_ratio"):
        if key in ohmic and key not in layered:
            layered[key] = ohmic[key]
    return RunConfig.model_validate(layered)


# =============================================================================
# Planning and running
# =============================================================================


@dataclass
class PlanEntry:
    """Engine chosen for one lattice size."""

    size: tuple[int, int]
    engine: EngineKind
    n_variables: int
    n_points: int
    work: float  # states summed (exact) or single-variable updates (mc)

    def to_dict(self) -> dict[str, Any]:
        return {
            "size": list(self.size),
            "engine": self.engine.value,
            "n_variables": self.n_variables,
            "n_points": self.n_points,
            "work": self.work,
        }


@dataclass
class RunResult:
    """Everything a run produced."""

    estimates: list[FidelityEstimate] = field(default_factory=list)
    threshold: ThresholdResult | None = None
    files: list[Path] = field(default_factory=list)


class ExperimentRunner:
    """
    Runs a RunConfig: reduces the environment, evaluates every (size, gamma)
    point with the resolved engine and writes the CSV/JSON artifacts.

    Usage:
        runner = ExperimentRunner(parse_config(text), app_config, threads=4)
        result = runner.sweep()
        runner.write_curves(result.estimates)
    """

    def __init__(self, run: RunConfig, app_config: dict[str, Any] | None = None, threads: int = 1):
        self.run = run
        self.app_config = app_config or {}
        self.threads = run.threads or threads
        self.evaluator = KernelEvaluator.from_config(self.app_config)
        self.logger = logging.getLogger(self.__class__.__name__)
        engines = config_section(self.app_config, "engines")
        self.auto_brute_max = engines.get("auto_brute_max_variables", AUTO_BRUTE_MAX_VARIABLES)
        self.binder_max_width = config_section(engines, "binder").get("max_width", BINDER_MAX_WIDTH)
        self._model: ModelCouplings | None = None
        self._normalizer: ModelCouplings | None = None

    # =========================================================================
    # Couplings
    # =========================================================================

    def _reduce(self) -> ModelCouplings:
        run = self.run
        return self.evaluator.reduce_to_model(
            run.env,
            1.0,
            run.variant,
            f_bar_ratio=run.f_bar_ratio,
            phi_bar_ratio=run.phi_bar_ratio,
            eta=run.eta,
            distances=run.kernel_distances or None,
        )

    @property
    def model(self) -> ModelCouplings:
        """Couplings at unit strength; kernels are evaluated only when needed."""
        if self._model is None:
            run = self.run
            if run.variant is ModelVariant.SUPER_LOCAL:
                self._model = ModelCouplings(run.variant)
            elif run.variant is ModelVariant.SUPER_IMAG and run.eta is not None:
                self._model = ModelCouplings(run.variant, eta=run.eta)
            elif run.variant is ModelVariant.OHMIC_LONGRANGE:
                self._model = ModelCouplings(
                    run.variant, f_bar=run.f_bar_ratio, phi_bar=run.phi_bar_ratio
                )
            else:
                self._model = self._reduce()
        return self._model

    @property
    def normalizer(self) -> float | None:
        """F(Delta; 0; beta), or Delta F for the Ohmic model; None if unavailable."""
        if self._normalizer is None:
            try:
                self._normalizer = self._reduce()
            except KernelError as e:
                self.logger.warning(f"Kernel normalization unavailable: {e}")
                return None
        return self._normalizer.xi

    def gamma_grid(self) -> list[float]:
        if self.run.lambdas is None:
            return self.run.gamma_grid()
        if self.normalizer is None:
            raise ConfigError("a lambda grid needs F(Delta; 0; beta), which could not be evaluated")
        return sorted(lam**2 * self.normalizer for lam in self.run.lambdas)

    # =========================================================================
    # Engines
    # =========================================================================

    def resolve_engine(self, geom: SurfaceGeometry) -> EngineKind:
        """
        Engine for one size. auto picks brute force for small lattices, the
        Binder transfer for complex couplings on narrow strips, and Monte
        Carlo for real couplings.

        Raises:
            EngineError: no engine can handle the size and couplings
        """
        requested = self.run.engine
        complex_couplings = self.run.has_complex_couplings
        long_range = self.run.variant.is_long_range
        if requested is EngineKind.BINDER and long_range:
            raise EngineError("the Binder engine cannot handle long-range couplings")
        if requested is not EngineKind.AUTO:
            return requested
        if geom.n_variables <= self.auto_brute_max:
            return EngineKind.BRUTE
        if complex_couplings and not long_range and geom.nx <= self.binder_max_width:
            return EngineKind.BINDER
        if not complex_couplings:
            return EngineKind.MC
        raise EngineError(
            f"no engine for {geom!r} with complex couplings: too many variables for brute "
            f"force and {'long-range' if long_range else 'too wide'} for the Binder engine"
        )

    def plan(self) -> list[PlanEntry]:
        """Engine and work estimate per size."""
        gammas = self.gamma_grid()
        schedule = self.run.schedule
        entries = []
        for nx, ny in self.run.sizes:
            geom = build_lattice(nx, ny)
            kind = self.resolve_engine(geom)
            if kind is EngineKind.BRUTE:
                work = float(2**geom.n_variables)
            elif kind is EngineKind.BINDER:
                work = float(6 * ny * 4 ** (nx + 1))
            else:
                work = float(schedule.n_sweeps * geom.n_variables)
            entries.append(PlanEntry((nx, ny), kind, geom.n_variables, len(gammas), work))
        return entries

    def _engine(self, kind: EngineKind):
        if kind is EngineKind.BRUTE:
            return BruteForceEngine(self.app_config)
        if kind is EngineKind.BINDER:
            return BinderEngine(self.app_config)
        return MonteCarloEngine(self.app_config)

    def sweep(self, gammas: list[float] | None = None) -> list[FidelityEstimate]:
        """Fidelity at every (size, gamma), sorted by size then gamma."""
        if not self.run.sizes:
            raise ConfigError("no lattice sizes given")
        gammas = sorted(gammas if gammas is not None else self.gamma_grid())
        if not gammas:
            raise ConfigError("no gamma or lambda grid given")
        model = self.model

        by_engine: dict[EngineKind, list[SurfaceGeometry]] = {}
        for nx, ny in self.run.sizes:
            geom = build_lattice(nx, ny)
            by_engine.setdefault(self.resolve_engine(geom), []).append(geom)

        estimates: list[FidelityEstimate] = []
        for kind, geoms in by_engine.items():
            engine = self._engine(kind)
            self.logger.info(
                f"{kind.value}: {len(geoms)} sizes x {len(gammas)} points on {self.threads} threads"
            )
            if kind is EngineKind.MC:
                estimates += engine.run_sweep(
                    geoms, model, gammas, self.run.schedule, self.run.warm_start, self.threads
                )
                continue
            tasks = [(g, xi) for g in geoms for xi in gammas]
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                estimates += list(pool.map(lambda t: engine.fidelity(t[0], model, t[1]), tasks))

        for estimate in estimates:
            if estimate.seed is None:
                estimate.seed = self.run.seed
        return sorted(estimates, key=lambda e: (e.size, e.xi))

    def threshold(self, estimates: list[FidelityEstimate]) -> ThresholdResult:
        """Crossing analysis of a finished sweep, converted back to lambda when possible."""
        curves = curves_from_estimates(estimates)
        kernel_note = ""
        if self.normalizer is not None:
            kernel_note = f"lambda_c via {self._normalizer.kernel_method.value} F(Delta; 0; beta)"
        return find_crossing_from_config(
            curves, self.app_config, kernel_value=self.normalizer, method_note=kernel_note
        )

    # =========================================================================
    # Outputs
    # =========================================================================

    @property
    def out_dir(self) -> Path:
        path = Path(self.run.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def write_curves(self, estimates: list[FidelityEstimate]) -> Path:
        path = self.out_dir / CURVES_FILENAME
        rows = sorted(estimates, key=lambda e: (e.size, e.xi))
        with open(path, "w", newline="") as f:
            f.write(f"# tst {VERSION}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CURVES_HEADER)
            for e in rows:
                writer.writerow(
                    [
                        e.size[0],
                        e.size[1],
                        format_real(e.xi),
                        format_real(e.fidelity),
                        format_real(e.stderr),
                        e.method.value,
                        e.seed,
                    ]
                )
        self.logger.info(f"Wrote {len(rows)} rows to {path}")
        return path

    def write_threshold(self, result: ThresholdResult) -> Path:
        path = self.out_dir / THRESHOLD_FILENAME
        report = result.to_dict()
        report["env"] = self.run.env.model_dump(mode="json")
        report["variant"] = self.run.variant.value
        report["version"] = VERSION
        try:
            kwargs: dict[str, Any] = {"evaluator": self.evaluator}
            if self.run.env.s == OHMIC:
                kwargs["f_bar_ratio"] = self.run.f_bar_ratio
            reference = critical_coupling(self.run.env, **kwargs)
            report["analytic_lambda_c"] = reference.lambda_c
        except (KernelError, ValueError) as e:
            self.logger.debug(f"No analytic threshold: {e}")
        with open(path, "w") as f:
            json.dump(_json_safe(report), f, indent=2, sort_keys=True)
            f.write("\n")
        self.logger.info(f"Wrote {path}")
        return path

    def write_kernels(self) -> Path:
        path = self.out_dir / KERNELS_FILENAME
        env = self.run.env
        distances = sorted({0.0, *self.run.kernel_distances})
        with open(path, "w", newline="") as f:
            f.write(f"# tst {VERSION}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(KERNELS_HEADER)
            for d in distances:
                row = self.evaluator.kernel_row(env, d * env.a)
                writer.writerow(
                    [format_real(d)]
                    + [format_real(row[key]) for key in KERNELS_HEADER[1:-1]]
                    + [row["regime"]]
                )
        self.logger.info(f"Wrote {len(distances)} kernel rows to {path}")
        return path


def _json_safe(value: Any) -> Any:
    """Infinite floats become strings so the report stays valid JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


# =============================================================================
# Oracle checks
# =============================================================================


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_validation(app_config: dict[str, Any] | None = None, seed: int = 7) -> list[CheckResult]:
    """Cross-check the engines and the mass-field symmetries on small lattices."""
    app_config = app_config or {}
    brute = BruteForceEngine(app_config)
    binder = BinderEngine(app_config)
    rng = np.random.default_rng(seed)
    results = []

    def check(name: str, passed: bool, detail: str) -> None:
        results.append(CheckResult(name, bool(passed), detail))
        logger.info(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    for size in [(2, 2), (3, 2), (1, 3)]:
        geom = SurfaceGeometry(*size)
        model = ModelCouplings(ModelVariant.GENERAL_KERNEL, j_complex=0.2 - 0.1j)
        exact = brute.amplitudes(geom, model, 0.8)
        transfer = binder.amplitudes(geom, model, 0.8)
        diff = max(abs(exact.ln_z - transfer.ln_z), abs(exact.b_corr - transfer.b_corr))
        check(f"binder == brute {size}", diff < 1e-9, f"max deviation {diff:.2e}")

    geom = SurfaceGeometry(3, 2)
    model = ModelCouplings(ModelVariant.GENERAL_KERNEL, j_complex=0.15 + 0.25j)
    reduced = binder.amplitudes(geom, model, 0.9)
    full = assemble_full(*binder.all_amplitudes(geom, model, 0.9))
    diff = abs(reduced.b_corr - full.b_corr)
    check("reduced patterns == full", diff < 1e-10, f"|dB| = {diff:.2e}")

    geom = SurfaceGeometry(3, 3)
    config = MassFieldConfig.random(geom.n_plaquettes, rng)
    j = 0.2 + 0.3j
    energy = massfield_energy(geom, config, j)
    flipped = massfield_energy(geom, MassFieldConfig.from_vector(-config.to_vector()), j)
    check("global flip invariance", flipped.isclose(energy), f"{energy} vs {flipped}")
    swapped_config = MassFieldConfig(
        config.nu, config.mu, config.beta_t, config.beta_b, config.alpha_t, config.alpha_b
    )
    swapped = massfield_energy(geom, swapped_config, j)
    conjugated = math.isclose(swapped.re, energy.re, abs_tol=1e-9) and math.isclose(
        swapped.im, -energy.im, abs_tol=1e-9
    )
    check("layer swap conjugation", conjugated, f"{energy} vs {swapped}")
    imag = ModelCouplings(ModelVariant.SUPER_IMAG, eta=0.15)
    spin = energy_super_imag(geom, mass_to_spin(geom, config), imag)
    mass = massfield_energy(geom, config, imag.coupling)
    offset = abs(complex(mass) - complex(spin) - geom.n_qubits / 2)
    check("spin == mass-field energy", offset < 1e-9, f"offset {offset:.2e}")

    geom = SurfaceGeometry(2, 2)
    local = ModelCouplings(ModelVariant.SUPER_LOCAL)
    exact = brute.amplitudes(geom, local, 0.6).fidelity
    schedule = McSchedule(n_sweeps=200_000, n_bins=32, seed=seed)
    estimate, _ = MonteCarloEngine(app_config).estimate(geom, local, 0.6, schedule)
    gap = abs(estimate.fidelity - exact)
    check(
        "mc == brute (2, 2)",
        gap <= 3 * estimate.stderr,
        f"|dF| = {gap:.2e}, 3 stderr = {3 * estimate.stderr:.2e}",
    )
    return results
