"""Bath kernels F and Phi for a two-dimensional bosonic environment.

Two evaluation paths are provided:

- quadrature of the defining integrals over the dimensionless frequency
  x = omega * Delta, split into panels no wider than the Bessel half-period;
- the tabulated asymptotic closed forms for s in {+1/2, 0, -1/2}, guarded by
  their validity regime.

Usage:
    evaluator = KernelEvaluator.from_config(config)
    value = evaluator.f_quadrature(env, r=0.0, use_beta=True)
"""

import logging
import math
import warnings
from typing import Any

import numpy as np
from scipy import integrate, special

from constants import (
    DEFAULT_DISTANCE_MARGIN,
    DEFAULT_F_BAR_RATIO,
    DEFAULT_KERNEL_TOL,
    DEFAULT_MAX_BETA_OVER_DELTA,
    DEFAULT_MAX_PANELS,
    DEFAULT_PHI_BAR_RATIO,
    DEFAULT_RELATIVE_FLOOR,
    DISTANCE_DECIMALS,
    ENVELOPE_CUTOFF,
    NEAREST_NEIGHBOR_DISTANCE,
    OHMIC,
    PANEL_QUAD_LIMIT,
    SUB_OHMIC,
    SUPER_OHMIC,
    TABULATED_EXPONENTS,
)
from errors import InvalidParam, NonConvergence, OutOfRegime, Unsupported, VariantMismatch
from models import (
    CausalFlag,
    EnvironmentSpec,
    KernelEntry,
    KernelMethod,
    KernelTable,
    KernelValue,
    ModelCouplings,
    ModelVariant,
    RegimeTag,
    ThermalFlag,
)
from utils import config_section

logger = logging.getLogger(__name__)


def classify_regime(env: EnvironmentSpec, r: float) -> RegimeTag:
    """Tag a separation as inside or outside the light cone.

    The bath is thermal while beta < Delta; beta = Delta already counts as vacuum.
    """
    thermal = ThermalFlag.THERMAL if env.beta < env.delta else ThermalFlag.VACUUM
    if abs(r) < env.light_cone:
        causal = CausalFlag.TIMELIKE
    else:
        causal = CausalFlag.SPACELIKE
    return RegimeTag(thermal, causal)


def _prefactor(env: EnvironmentSpec) -> float:
    return 1.0 / (math.pi * env.omega0**2 * (env.omega0 * env.delta) ** (2.0 * env.s))


def _uv_damping(env: EnvironmentSpec) -> float:
    """1 / (v Lambda), zero for an infinite cutoff."""
    return 0.0 if math.isinf(env.cutoff) else 1.0 / (env.v * env.cutoff)


class KernelEvaluator:
    """
    Evaluates F(Delta; r; beta) and Phi(Delta; r) by quadrature or closed form.

    Features:
    - Panel quadrature with a configurable tolerance and panel budget
    - Closed forms for the tabulated exponents with regime checks
    - Reduction of an environment to the couplings of an effective model

    Usage:
        evaluator = KernelEvaluator(tol=1e-10)
        f0 = evaluator.f_value(env, 0.0, use_beta=True)
    """

    def __init__(
        self,
        tol: float = DEFAULT_KERNEL_TOL,
        relative_floor: float = DEFAULT_RELATIVE_FLOOR,
        max_panels: int = DEFAULT_MAX_PANELS,
        max_beta_over_delta: float = DEFAULT_MAX_BETA_OVER_DELTA,
        distance_margin: float = DEFAULT_DISTANCE_MARGIN,
    ):
        if tol <= 0:
            raise InvalidParam(f"tolerance must be positive, got {tol}")
        self.tol = tol
        self.relative_floor = relative_floor
        self.max_panels = max_panels
        self.max_beta_over_delta = max_beta_over_delta
        self.distance_margin = distance_margin

    @classmethod
    def from_config(cls, config: dict[str, Any]) -> "KernelEvaluator":
        """Create an evaluator from the kernels section of config.yaml."""
        section = config_section(config, "kernels")
        return cls(
            tol=section.get("tol", DEFAULT_KERNEL_TOL),
            relative_floor=section.get("relative_floor", DEFAULT_RELATIVE_FLOOR),
            max_panels=section.get("max_panels", DEFAULT_MAX_PANELS),
            max_beta_over_delta=section.get(
                "max_beta_over_delta", DEFAULT_MAX_BETA_OVER_DELTA
            ),
            distance_margin=section.get("distance_margin", DEFAULT_DISTANCE_MARGIN),
        )

    # =========================================================================
    # Quadrature
    # =========================================================================

    def _integrate(self, integrand, damping: float, k: float, tol: float) -> tuple[float, float]:
        """Integrate over x in [0, x_max] panel by panel.

        x_max is where the exponential envelope falls below ENVELOPE_CUTOFF;
        panels are at most pi wide and never wider than half a Bessel period.
        """
        x_max = math.log(1.0 / ENVELOPE_CUTOFF) / damping
        width = math.pi if k <= 1.0 else math.pi / k
        n_panels = max(1, math.ceil(x_max / width))
        if n_panels > self.max_panels:
            raise NonConvergence(
                f"{n_panels} panels needed, budget is {self.max_panels}"
            )

        edges = np.linspace(0.0, x_max, n_panels + 1)
        panel_tol = tol / n_panels
        total = 0.0
        abs_total = 0.0
        err_total = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for lo, hi in zip(edges[:-1], edges[1:], strict=True):
                value, err = integrate.quad(
                    integrand,
                    lo,
                    hi,
                    epsabs=panel_tol,
                    epsrel=self.relative_floor,
                    limit=PANEL_QUAD_LIMIT,
                )
                total += value
                abs_total += abs(value)
                err_total += err

        if not math.isfinite(total) or err_total > max(tol, self.relative_floor * abs_total):
            raise NonConvergence(
                f"quadrature error {err_total:.3e} exceeds tolerance {tol:.3e}"
            )
        return total, err_total

    def f_quadrature(
        self, env: EnvironmentSpec, r: float, use_beta: bool = True, tol: float | None = None
    ) -> KernelValue:
        """
        F(Delta; r; beta) by quadrature.

        Args:
            env: Environment parameters
            r: Qubit separation, same length units as v * Delta
            use_beta: Include the thermal factor; False gives F(Delta; r; 0)
            tol: Absolute tolerance, defaults to the evaluator's

        Returns:
            KernelValue tagged QUADRATURE

        Raises:
            InvalidParam: s <= -1, or the integral diverges (no damping)
            NonConvergence: tolerance not met within the panel budget
        """
        if env.s <= -1:
            raise InvalidParam(f"F diverges at the origin for s = {env.s}")
        beta = env.beta if use_beta else 0.0
        damping = (beta + _uv_damping(env)) / env.delta
        if damping == 0:
            raise InvalidParam("F diverges without a UV cutoff or thermal damping")

        k = abs(r) / env.light_cone
        power = 2.0 * env.s - 1.0

        def integrand(x: float) -> float:
            return (
                x**power
                * 2.0
                * math.sin(0.5 * x) ** 2
                * math.exp(-damping * x)
                * special.j0(k * x)
            )

        prefactor = _prefactor(env)
        tol = self.tol if tol is None else tol
        value, err = self._integrate(integrand, damping, k, tol / prefactor)
        return KernelValue(prefactor * value, KernelMethod.QUADRATURE, prefactor * err)

    def phi_quadrature(
        self, env: EnvironmentSpec, r: float, tol: float | None = None
    ) -> KernelValue:
        """
        Phi(Delta; r) by quadrature; damped by the UV cutoff only.

        Raises:
            InvalidParam: s <= -1 or an infinite cutoff
            NonConvergence: tolerance not met within the panel budget
        """
        if env.s <= -1:
            raise InvalidParam(f"Phi diverges at the origin for s = {env.s}")
        damping = _uv_damping(env) / env.delta
        if damping == 0:
            raise InvalidParam("Phi needs a finite UV cutoff")

        k = abs(r) / env.light_cone
        power = 2.0 * env.s - 1.0

        def integrand(x: float) -> float:
            return x**power * (x - math.sin(x)) * math.exp(-damping * x) * special.j0(k * x)

        prefactor = _prefactor(env)
        tol = self.tol if tol is None else tol
        value, err = self._integrate(integrand, damping, k, tol / prefactor)
        return KernelValue(prefactor * value, KernelMethod.QUADRATURE, prefactor * err)

    # =========================================================================
    # Closed forms
    # =========================================================================

    def _check_tabulated(self, env: EnvironmentSpec) -> None:
        if env.s not in TABULATED_EXPONENTS:
            raise Unsupported(f"no closed form for s = {env.s}")

    def _check_f_regime(self, env: EnvironmentSpec, r: float, use_beta: bool) -> None:
        uv_length = _uv_damping(env)
        if use_beta:
            if env.beta == 0:
                raise InvalidParam("thermal closed forms need beta > 0")
            if env.beta_over_delta > self.max_beta_over_delta:
                raise OutOfRegime(
                    f"beta/Delta = {env.beta_over_delta:.3g} exceeds "
                    f"{self.max_beta_over_delta}"
                )
        if r != 0:
            scale = max(env.v * env.beta if use_beta else 0.0, uv_length)
            if abs(r) < self.distance_margin * scale:
                raise OutOfRegime(
                    f"|r| = {abs(r):.3g} is within {self.distance_margin} x {scale:.3g}"
                )
        elif not use_beta and env.s != SUB_OHMIC:
            if uv_length == 0:
                raise InvalidParam(f"F(Delta; 0; 0) diverges for s = {env.s} without a cutoff")
            if uv_length / env.delta > self.max_beta_over_delta:
                raise OutOfRegime("v Lambda Delta is too small for the vacuum closed form")

    def f_closed_form(self, env: EnvironmentSpec, r: float, use_beta: bool = True) -> KernelValue:
        """
        Tabulated asymptotic F for s in {+1/2, 0, -1/2}.

        The r != 0 rows carry no UV dependence; with use_beta=False they are
        evaluated at beta = 0.

        Raises:
            Unsupported: s is not tabulated
            InvalidParam: thermal row requested at beta = 0
            OutOfRegime: beta/Delta or |r| outside the asymptotic regime
        """
        self._check_tabulated(env)
        self._check_f_regime(env, r, use_beta)

        s, v, w0, delta = env.s, env.v, env.omega0, env.delta
        beta = env.beta if use_beta else 0.0
        r = abs(r)
        ct = env.light_cone  # v Delta

        if r == 0 and not use_beta:
            if s == SUPER_OHMIC:
                value = v * env.cutoff / (math.pi * w0**3)
            elif s == OHMIC:
                value = math.log(v * env.cutoff * delta) / (math.pi * w0**2)
            else:
                value = delta / (2.0 * w0)
        elif r == 0:
            if s == SUPER_OHMIC:
                value = 1.0 / (math.pi * w0**3 * beta)
            elif s == OHMIC:
                value = math.log(delta / beta) / (math.pi * w0**2)
            else:
                ratio = beta / delta
                value = (delta / (math.pi * w0)) * (math.pi / 2 + ratio * math.log(ratio))
        elif s == SUPER_OHMIC:
            outside = 1.0 / math.sqrt(r * r - ct * ct) if r > ct else 0.0
            value = v / (math.pi * w0**3) * (1.0 / r - outside)
        elif s == OHMIC:
            if r < ct:
                value = math.acosh(ct / r)
            elif r > ct:
                value = v * beta / math.sqrt(r * r - ct * ct)
            else:
                value = 0.0
            value = (value - v * beta / r) / (math.pi * w0**2)
        else:
            u = r / ct
            if r < ct:
                value = (math.pi / 2 - u) + (beta / delta) * math.acosh(1.0 / u)
            else:
                value = math.asin(1.0 / u) + math.sqrt(u * u - 1.0) - u
            value *= delta / (math.pi * w0)
        return KernelValue(value, KernelMethod.CLOSED_FORM)

    def phi_closed_form(self, env: EnvironmentSpec, r: float) -> KernelValue:
        """
        Tabulated asymptotic Phi for s in {+1/2, 0, -1/2}; exactly 0 outside
        the light cone where the table says so.

        Raises:
            Unsupported: s is not tabulated
            InvalidParam: r = 0
        """
        self._check_tabulated(env)
        if r == 0:
            raise InvalidParam("Phi is only defined between distinct qubits")

        s, v, w0, delta = env.s, env.v, env.omega0, env.delta
        r = abs(r)
        ct = env.light_cone

        if s == SUPER_OHMIC:
            value = v / (math.pi * w0**3) / math.sqrt(ct * ct - r * r) if r < ct else 0.0
        elif s == OHMIC:
            value = (math.pi / 2 if r < ct else math.asin(ct / r)) / (math.pi * w0**2)
        elif r < ct:
            u = ct / r
            arg = math.sqrt(u * u - 1.0) + u - math.sqrt(1.0 - 1.0 / (u * u))
            value = delta / (math.pi * w0) * math.log(arg)
        else:
            value = 0.0
        return KernelValue(value, KernelMethod.CLOSED_FORM)

    # =========================================================================
    # Preferred path
    # =========================================================================

    def f_value(self, env: EnvironmentSpec, r: float, use_beta: bool = True) -> KernelValue:
        """Closed form when tabulated and in regime, quadrature otherwise."""
        try:
            return self.f_closed_form(env, r, use_beta)
        except (Unsupported, OutOfRegime, InvalidParam) as e:
            logger.debug(f"F closed form unavailable ({e}); using quadrature")
        return self.f_quadrature(env, r, use_beta)

    def phi_value(self, env: EnvironmentSpec, r: float) -> KernelValue:
        """Closed form when tabulated, quadrature otherwise."""
        if env.s in TABULATED_EXPONENTS:
            return self.phi_closed_form(env, r)
        return self.phi_quadrature(env, r)

    def kernel_table(self, env: EnvironmentSpec, distances: list[float]) -> KernelTable:
        """
        Kernels at the given separations (units of a) plus the on-site entry.

        Returns:
            Mapping from rounded distance to KernelEntry
        """
        table: KernelTable = {
            0.0: KernelEntry(
                f_thermal=self.f_value(env, 0.0, True).value,
                f_vacuum=self.f_value(env, 0.0, False).value,
                phi=0.0,
            )
        }
        for d in sorted({round(float(d), DISTANCE_DECIMALS) for d in distances}):
            if d == 0:
                continue
            r = d * env.a
            table[d] = KernelEntry(
                f_thermal=self.f_value(env, r, True).value,
                f_vacuum=self.f_value(env, r, False).value,
                phi=self.phi_value(env, r).value,
            )
        logger.info(f"Built kernel table with {len(table)} distances")
        return table

    def reduce_to_model(
        self,
        env: EnvironmentSpec,
        lam: float,
        variant: ModelVariant,
        f_bar_ratio: float = DEFAULT_F_BAR_RATIO,
        phi_bar_ratio: float = DEFAULT_PHI_BAR_RATIO,
        eta: float | None = None,
        distances: list[float] | None = None,
    ) -> ModelCouplings:
        """
        Reduce an environment and physical coupling to effective-model couplings.

        Args:
            env: Environment parameters
            lam: Qubit-bath coupling lambda
            variant: Effective model to reduce to
            f_bar_ratio: F_bar / Delta F for the Ohmic model
            phi_bar_ratio: Phi_bar / Delta F for the Ohmic model
            eta: Override for the super_imag nearest-neighbour coupling
            distances: Separations (units of a) tabulated for general_kernel

        Returns:
            ModelCouplings whose xi is lambda^2 times the normalizing kernel

        Raises:
            VariantMismatch: variant derived for a different exponent
        """
        expected = variant.expected_exponent
        if expected is not None and env.s != expected:
            raise VariantMismatch(
                f"variant '{variant.value}' needs s = {expected}, got s = {env.s}"
            )
        if lam < 0:
            raise InvalidParam(f"lambda must be >= 0, got {lam}")

        f0 = self.f_value(env, 0.0, use_beta=True)
        nn = NEAREST_NEIGHBOR_DISTANCE * env.a

        if variant is ModelVariant.SUPER_LOCAL:
            return ModelCouplings(variant, xi=lam**2 * f0.value, kernel_method=f0.method)

        if variant is ModelVariant.SUPER_IMAG:
            if eta is None:
                eta = self.phi_value(env, nn).value / f0.value
            return ModelCouplings(
                variant, xi=lam**2 * f0.value, eta=eta, kernel_method=f0.method
            )

        if variant is ModelVariant.GENERAL_KERNEL:
            f_nn = self.f_value(env, nn, use_beta=True).value
            phi_nn = self.phi_value(env, nn).value
            table = self.kernel_table(env, distances) if distances else None
            return ModelCouplings(
                variant,
                xi=lam**2 * f0.value,
                j_complex=complex(f_nn, phi_nn) / f0.value,
                kernel_table=table,
                kernel_method=f0.method,
            )

        delta_f = f0.value / (1.0 + f_bar_ratio)
        return ModelCouplings(
            variant,
            xi=lam**2 * delta_f,
            delta_f=delta_f,
            f_bar=f_bar_ratio * delta_f,
            phi_bar=phi_bar_ratio * delta_f,
            kernel_method=f0.method,
        )

    def kernel_row(self, env: EnvironmentSpec, r: float) -> dict[str, Any]:
        """Both evaluation paths at one separation; unavailable entries are None."""

        def attempt(fn, *args) -> float | None:
            try:
                return fn(*args).value
            except (Unsupported, OutOfRegime, InvalidParam) as e:
                logger.debug(f"{fn.__name__} at r={r}: {e}")
                return None

        phi_quad = attempt(self.phi_quadrature, env, r) if r != 0 else 0.0
        phi_closed = attempt(self.phi_closed_form, env, r) if r != 0 else 0.0
        return {
            "distance": r,
            "F_quad": attempt(self.f_quadrature, env, r, True),
            "F_closed": attempt(self.f_closed_form, env, r, True),
            "Phi_quad": phi_quad,
            "Phi_closed": phi_closed,
            "regime": str(classify_regime(env, r)),
        }


# Module-level shortcuts with default tolerances


def f_quadrature(env: EnvironmentSpec, r: float, use_beta: bool = True, tol: float | None = None) -> KernelValue:
    return KernelEvaluator().f_quadrature(env, r, use_beta, tol)


def phi_quadrature(env: EnvironmentSpec, r: float, tol: float | None = None) -> KernelValue:
    return KernelEvaluator().phi_quadrature(env, r, tol)


def f_closed_form(env: EnvironmentSpec, r: float, use_beta: bool = True) -> KernelValue:
    return KernelEvaluator().f_closed_form(env, r, use_beta)


def phi_closed_form(env: EnvironmentSpec, r: float) -> KernelValue:
    return KernelEvaluator().phi_closed_form(env, r)


def reduce_to_model(env: EnvironmentSpec, lam: float, variant: ModelVariant, **kwargs: Any) -> ModelCouplings:
    return KernelEvaluator().reduce_to_model(env, lam, variant, **kwargs)
