"""Data models for the surface-code threshold simulator."""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from constants import (
    BATH_DIMENSION,
    DEFAULT_BURN_FRACTION,
    DEFAULT_F_BAR_RATIO,
    DEFAULT_MEASURE_STRIDE,
    DEFAULT_N_BINS,
    DEFAULT_N_SWEEPS,
    DEFAULT_PHI_BAR_RATIO,
    DEFAULT_SEED,
    MIN_N_BINS,
    OHMIC,
    SUPER_OHMIC,
)


class ThermalFlag(str, Enum):
    """Whether a kernel includes the bath temperature."""

    VACUUM = "vacuum"
    THERMAL = "thermal"


class CausalFlag(str, Enum):
    """Position of a qubit separation relative to the light cone v*Delta."""

    TIMELIKE = "timelike"  # |r| < v Delta
    SPACELIKE = "spacelike"  # |r| >= v Delta


class KernelMethod(str, Enum):
    """How a kernel value was obtained."""

    QUADRATURE = "quadrature"
    CLOSED_FORM = "closed_form"


class ModelVariant(str, Enum):
    """Effective statistical models for the surface code under the bath."""

    SUPER_LOCAL = "super_local"
    SUPER_IMAG = "super_imag"
    GENERAL_KERNEL = "general_kernel"
    OHMIC_LONGRANGE = "ohmic_longrange"

    @property
    def expected_exponent(self) -> float | None:
        """Spectral exponent the variant was derived for (None = any)."""
        if self in (ModelVariant.SUPER_LOCAL, ModelVariant.SUPER_IMAG):
            return SUPER_OHMIC
        if self is ModelVariant.OHMIC_LONGRANGE:
            return OHMIC
        return None

    @property
    def is_long_range(self) -> bool:
        return self is ModelVariant.OHMIC_LONGRANGE


class EngineKind(str, Enum):
    """Fidelity engines; AUTO is resolved per lattice size."""

    AUTO = "auto"
    BRUTE = "brute"
    BINDER = "binder"
    MC = "mc"


@dataclass(frozen=True)
class RegimeTag:
    """Regime of a kernel evaluation."""

    thermal_flag: ThermalFlag
    causal_flag: CausalFlag

    def __str__(self) -> str:
        return f"{self.thermal_flag.value}/{self.causal_flag.value}"


@dataclass(frozen=True)
class KernelValue:
    """A kernel value with provenance."""

    value: float
    method: KernelMethod
    est_error: float = 0.0  # quadrature error estimate, 0 for closed forms

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class KernelEntry:
    """Kernels at one qubit separation, as needed by the general energy."""

    f_thermal: float  # F(Delta; r; beta)
    f_vacuum: float  # F(Delta; r; 0)
    phi: float  # Phi(Delta; r), 0 on site


# Distance in units of a (rounded) -> kernels at that distance
KernelTable = dict[float, KernelEntry]


@dataclass(frozen=True)
class ModelCouplings:
    """Couplings of one effective model, energies at unit strength.

    The engines multiply energies by a fictitious inverse temperature xi; the
    value stored here is the point the couplings were reduced at.
    """

    variant: ModelVariant
    xi: float = 0.0
    eta: float = 0.0  # imaginary nearest-neighbour coupling of super_imag
    j_complex: complex = 0j  # normalized nearest-neighbour coupling
    delta_f: float = 1.0  # F(0) - F_bar of the Ohmic model
    f_bar: float = 0.0
    phi_bar: float = 0.0
    kernel_table: KernelTable | None = None
    kernel_method: KernelMethod | None = None

    def __post_init__(self):
        if self.xi < 0 or not math.isfinite(self.xi):
            raise ValueError(f"xi must be finite and >= 0, got {self.xi}")
        if self.variant is ModelVariant.SUPER_LOCAL and (self.eta or self.j_complex):
            raise ValueError("super_local carries no nearest-neighbour coupling")
        if self.variant is ModelVariant.OHMIC_LONGRANGE and self.delta_f <= 0:
            raise ValueError(f"delta_f must be positive, got {self.delta_f}")

    @property
    def coupling(self) -> complex:
        """Nearest-neighbour coupling J entering the mass-field energy."""
        if self.variant is ModelVariant.SUPER_IMAG:
            return complex(0.0, self.eta)
        if self.variant is ModelVariant.GENERAL_KERNEL:
            return complex(self.j_complex)
        return 0j

    @property
    def f_bar_ratio(self) -> float:
        return self.f_bar / self.delta_f if self.variant.is_long_range else 0.0

    @property
    def phi_bar_ratio(self) -> float:
        return self.phi_bar / self.delta_f if self.variant.is_long_range else 0.0

    @property
    def is_real(self) -> bool:
        """True when Boltzmann weights are real and positive."""
        return self.coupling.imag == 0.0 and self.phi_bar_ratio == 0.0

    def with_xi(self, xi: float) -> "ModelCouplings":
        return replace(self, xi=xi)


@dataclass
class BilayerSpinConfig:
    """Physical-qubit variables of the two layers (forward and backward)."""

    sigma: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.int8)
        self.tau = np.asarray(self.tau, dtype=np.int8)
        if self.sigma.shape != self.tau.shape or self.sigma.ndim != 1:
            raise ValueError("sigma and tau must be 1-D arrays of equal length")
        for layer in (self.sigma, self.tau):
            if not np.all(np.abs(layer) == 1):
                raise ValueError("spins must be +1 or -1")

    @property
    def n_qubits(self) -> int:
        return int(self.sigma.size)

    def copy(self) -> "BilayerSpinConfig":
        return BilayerSpinConfig(self.sigma.copy(), self.tau.copy())


@dataclass
class MassFieldConfig:
    """Plaquette variables mu, nu plus the four boundary fields.

    Plaquette p = y * nx + x, with y = 0 the bottom row.
    """

    mu: np.ndarray
    nu: np.ndarray
    alpha_t: int = 1
    alpha_b: int = 1
    beta_t: int = 1
    beta_b: int = 1

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.int8)
        self.nu = np.asarray(self.nu, dtype=np.int8)
        if self.mu.shape != self.nu.shape or self.mu.ndim != 1:
            raise ValueError("mu and nu must be 1-D arrays of equal length")
        values = np.concatenate([self.mu, self.nu, self.boundary])
        if not np.all(np.abs(values) == 1):
            raise ValueError("mass fields must be +1 or -1")

    @property
    def n_plaquettes(self) -> int:
        return int(self.mu.size)

    @property
    def boundary(self) -> np.ndarray:
        return np.array(
            [self.alpha_t, self.alpha_b, self.beta_t, self.beta_b], dtype=np.int8
        )

    @classmethod
    def uniform(cls, n_plaquettes: int, value: int = 1) -> "MassFieldConfig":
        ones = np.full(n_plaquettes, value, dtype=np.int8)
        return cls(ones, ones.copy(), value, value, value, value)

    @classmethod
    def random(cls, n_plaquettes: int, rng: np.random.Generator) -> "MassFieldConfig":
        """Uniformly random configuration."""
        return cls.from_vector(rng.choice(np.array([-1, 1], dtype=np.int8), 2 * n_plaquettes + 4))

    def to_vector(self) -> np.ndarray:
        """Flatten as [mu..., nu..., alpha_t, alpha_b, beta_t, beta_b]."""
        return np.concatenate([self.mu, self.nu, self.boundary]).astype(np.int8)

    @classmethod
    def from_vector(cls, values: np.ndarray) -> "MassFieldConfig":
        values = np.asarray(values, dtype=np.int8)
        n = (values.size - 4) // 2
        if values.size != 2 * n + 4:
            raise ValueError(f"vector of length {values.size} is not a mass-field state")
        a_t, a_b, b_t, b_b = (int(v) for v in values[2 * n :])
        return cls(values[:n].copy(), values[n : 2 * n].copy(), a_t, a_b, b_t, b_b)

    def copy(self) -> "MassFieldConfig":
        return MassFieldConfig.from_vector(self.to_vector())


@dataclass(frozen=True)
class ComplexEnergy:
    """Energy with separately stored real and imaginary parts."""

    re: float
    im: float = 0.0

    @classmethod
    def from_complex(cls, value: complex) -> "ComplexEnergy":
        value = complex(value)
        return cls(value.real, value.imag)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __add__(self, other: "ComplexEnergy") -> "ComplexEnergy":
        return ComplexEnergy(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexEnergy") -> "ComplexEnergy":
        return ComplexEnergy(self.re - other.re, self.im - other.im)

    def isclose(self, other: "ComplexEnergy", abs_tol: float = 1e-9) -> bool:
        return math.isclose(self.re, other.re, abs_tol=abs_tol) and math.isclose(
            self.im, other.im, abs_tol=abs_tol
        )


@dataclass
class MagnetizationCache:
    """Layer magnetizations kept in step with the spins."""

    m_sigma: int
    m_tau: int

    @classmethod
    def from_spins(cls, config: BilayerSpinConfig) -> "MagnetizationCache":
        return cls(int(config.sigma.sum(dtype=np.int64)), int(config.tau.sum(dtype=np.int64)))


# Boundary sign pattern (alpha_t, alpha_b, beta_t, beta_b)
BoundaryPattern = tuple[int, int, int, int]


@dataclass
class AmplitudePair:
    """Partition function and boundary correlator of one (size, xi) point.

    z and the c_table entries are stored divided by exp(log_scale).
    """

    z: complex
    b_corr: complex
    c_table: dict[BoundaryPattern, complex]
    log_scale: float

    @property
    def ln_z(self) -> float:
        return math.log(abs(self.z)) + self.log_scale

    @property
    def fidelity(self) -> float:
        return 1.0 / (1.0 + self.b_corr.real)

    @property
    def imag_fraction(self) -> float:
        """|Im Z| / |Z|, zero for an exact real partition function."""
        return abs(self.z.imag) / abs(self.z) if self.z else 0.0


@dataclass
class ObservableReport:
    """Exact observables of one (size, xi) point."""

    fidelity: float
    energy: complex
    heat_capacity: complex
    b_corr: complex
    valid: bool = True
    notes: list[str] = field(default_factory=list)


@dataclass
class FidelityEstimate:
    """Fidelity at one (size, xi) point, from any engine."""

    fidelity: float
    stderr: float
    b_corr_mean: float
    b_corr_stderr: float
    acceptance_rate: float  # 1.0 for exact engines
    method: EngineKind
    size: tuple[int, int] | None = None
    xi: float | None = None
    seed: int | None = None
    valid: bool = True


@dataclass
class FidelityCurve:
    """Fidelity against the reduced coupling for one lattice size."""

    size: tuple[int, int]
    points: list[tuple[float, float, float]]  # (gamma, fidelity, stderr)

    def __post_init__(self):
        gammas = [p[0] for p in self.points]
        if len(gammas) < 2:
            raise ValueError(f"curve {self.size} needs at least two points")
        if any(b <= a for a, b in zip(gammas, gammas[1:], strict=False)):
            raise ValueError(f"curve {self.size} gammas must be strictly increasing")
        if any(p[2] < 0 for p in self.points):
            raise ValueError(f"curve {self.size} has a negative stderr")

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])

    @classmethod
    def from_estimates(
        cls, size: tuple[int, int], estimates: list[FidelityEstimate]
    ) -> "FidelityCurve":
        ordered = sorted(estimates, key=lambda e: e.xi)
        return cls(size, [(e.xi, e.fidelity, e.stderr) for e in ordered])


@dataclass(frozen=True)
class PairCrossing:
    """Crossing of the fidelity curves of two sizes."""

    size_a: tuple[int, int]
    size_b: tuple[int, int]
    gamma: float
    stderr: float = 0.0


@dataclass
class ThresholdResult:
    """Critical reduced coupling extracted from crossing curves."""

    gamma_c: float
    gamma_c_err: float
    pair_crossings: list[PairCrossing]
    method_note: str
    lambda_c: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma_c": self.gamma_c,
            "gamma_c_err": self.gamma_c_err,
            "lambda_c": self.lambda_c,
            "crossings": [
                {
                    "sizes": [list(c.size_a), list(c.size_b)],
                    "gamma": c.gamma,
                    "stderr": c.stderr,
                }
                for c in self.pair_crossings
            ],
            "method_note": self.method_note,
        }


@dataclass(frozen=True)
class CriticalCoupling:
    """Analytic critical coupling for one bath regime."""

    lambda_c: float
    gamma_c: float
    kernel_value: float
    kernel_method: KernelMethod
    scaling_form: float  # parametric dependence with prefactors dropped
    scaling_only: bool = False
    note: str = ""


# Pydantic models for input validation


class EnvironmentSpec(BaseModel):
    """Bath and code parameters. Units are consistent but unspecified."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    s: float = Field(..., description="Spectral exponent (+0.5, 0, -0.5 tabulated)")
    beta: float = Field(..., ge=0, description="Inverse bath temperature, 0 = vacuum")
    delta: float = Field(..., gt=0, description="Time between syndrome extractions")
    v: float = Field(..., gt=0, description="Bath propagation speed")
    cutoff: float = Field(math.inf, gt=0, description="UV cutoff Lambda")
    omega0: float = Field(1.0, gt=0, description="Characteristic frequency")
    a: float = Field(1.0, gt=0, description="Lattice spacing")
    dimension: int = Field(BATH_DIMENSION, description="Bath dimension")

    @field_validator("dimension")
    @classmethod
    def validate_dimension(cls, v: int) -> int:
        """Only two-dimensional baths are modelled."""
        if v != BATH_DIMENSION:
            raise ValueError(f"Invalid dimension '{v}'. Must be {BATH_DIMENSION}")
        return v

    @property
    def beta_over_delta(self) -> float:
        return self.beta / self.delta

    @property
    def light_cone(self) -> float:
        return self.v * self.delta


class McSchedule(BaseModel):
    """Monte Carlo run lengths. n_sweeps counts every sweep, burn-in included."""

    model_config = ConfigDict(extra="forbid")

    n_sweeps: int = Field(DEFAULT_N_SWEEPS, gt=0, description="Total sweeps")
    n_burn: int | None = Field(None, ge=0, description="Burn-in sweeps")
    n_bins: int = Field(DEFAULT_N_BINS, ge=MIN_N_BINS, description="Bins for errors")
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64, description="Root seed")
    measure_stride: int = Field(DEFAULT_MEASURE_STRIDE, ge=1)
    trace_path: str | None = Field(None, description="Per-measurement trace file")

    @model_validator(mode="after")
    def resolve_burn_in(self) -> "McSchedule":
        """Default burn-in and check there is enough data to bin."""
        if self.n_burn is None:
            self.n_burn = int(DEFAULT_BURN_FRACTION * self.n_sweeps)
        if self.n_burn >= self.n_sweeps:
            raise ValueError(
                f"n_burn ({self.n_burn}) must be smaller than n_sweeps ({self.n_sweeps})"
            )
        if self.n_measurements < self.n_bins:
            raise ValueError(
                f"{self.n_measurements} measurements cannot fill {self.n_bins} bins"
            )
        return self

    @property
    def n_measurements(self) -> int:
        return (self.n_sweeps - (self.n_burn or 0)) // self.measure_stride


class RunConfig(BaseModel):
    """A complete experiment: environment, model, sizes, grid and schedule."""

    model_config = ConfigDict(extra="forbid")

    env: EnvironmentSpec
    variant: ModelVariant
    engine: EngineKind = EngineKind.AUTO
    sizes: list[tuple[int, int]] = Field(default_factory=list)
    gammas: list[float] | None = None
    gamma_min: float | None = Field(None, ge=0)
    gamma_max: float | None = Field(None, ge=0)
    gamma_step: float | None = Field(None, gt=0)
    lambdas: list[float] | None = None
    eta: float | None = Field(None, description="Override for super_imag")
    f_bar_ratio: float = Field(DEFAULT_F_BAR_RATIO, ge=0)
    phi_bar_ratio: float = DEFAULT_PHI_BAR_RATIO
    schedule: McSchedule = Field(default_factory=McSchedule)
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    warm_start: bool = False
    threads: int | None = Field(None, ge=1)
    out_dir: str = "."
    kernel_distances: list[float] = Field(
        default_factory=list, description="Separations in units of a"
    )
    preset: str | None = None

    @field_validator("sizes", mode="before")
    @classmethod
    def normalize_sizes(cls, v: Any) -> Any:
        """Accept a code distance L next to literal [nx, ny] pairs.

        L means the distance-L planar patch, (nx, ny) = (L, L - 1), with
        L^2 + (L - 1)^2 qubits.
        """
        if not isinstance(v, list):
            return v
        out = []
        for item in v:
            if isinstance(item, int):
                if item < 2:
                    raise ValueError(f"Invalid code distance {item}. Must be >= 2")
                item = (item, item - 1)
            out.append(item)
        return out

    @field_validator("sizes")
    @classmethod
    def validate_sizes(cls, v: list[tuple[int, int]]) -> list[tuple[int, int]]:
        for nx, ny in v:
            if nx < 1 or ny < 1:
                raise ValueError(f"Invalid size '{nx}x{ny}'. Dimensions must be >= 1")
        return sorted(set(v))

    @field_validator("gammas", "lambdas")
    @classmethod
    def validate_grid(cls, v: list[float] | None) -> list[float] | None:
        if v is None:
            return v
        if any(x < 0 or not math.isfinite(x) for x in v):
            raise ValueError("grid values must be finite and >= 0")
        return sorted(set(v))

    @model_validator(mode="after")
    def validate_run(self) -> "RunConfig":
        """Cross-field checks: grid source, variant fit, sampler sign problem."""
        sources = [
            self.gammas is not None,
            self.gamma_min is not None or self.gamma_max is not None,
            self.lambdas is not None,
        ]
        if sum(sources) > 1:
            raise ValueError("give only one of gammas, gamma_min/max/step or lambdas")
        if sources[1] and None in (self.gamma_min, self.gamma_max, self.gamma_step):
            raise ValueError("a gamma range needs gamma_min, gamma_max and gamma_step")
        if sources[1] and self.gamma_max < self.gamma_min:
            raise ValueError("gamma_max must not be below gamma_min")

        expected = self.variant.expected_exponent
        if expected is not None and self.env.s != expected:
            raise ValueError(
                f"variant '{self.variant.value}' needs s = {expected}, got s = {self.env.s}"
            )

        if self.engine is EngineKind.MC and self.has_complex_couplings:
            raise ValueError(
                "engine 'mc' cannot sample complex couplings; use 'binder' or 'brute'"
            )
        self.schedule = self.schedule.model_copy(update={"seed": self.seed})
        return self

    @property
    def has_complex_couplings(self) -> bool:
        if self.variant is ModelVariant.SUPER_IMAG:
            return self.eta is None or self.eta != 0.0
        if self.variant is ModelVariant.GENERAL_KERNEL:
            return True
        if self.variant is ModelVariant.OHMIC_LONGRANGE:
            return self.phi_bar_ratio != 0.0
        return False

    @property
    def has_grid(self) -> bool:
        return any(x is not None for x in (self.gammas, self.gamma_min, self.lambdas))

    def gamma_grid(self) -> list[float]:
        """Reduced couplings from an explicit list or an inclusive range."""
        if self.gammas is not None:
            return list(self.gammas)
        if self.gamma_min is None:
            return []
        n = int(round((self.gamma_max - self.gamma_min) / self.gamma_step))
        return [round(self.gamma_min + k * self.gamma_step, 12) for k in range(n + 1)]
