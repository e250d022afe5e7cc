"""Critical couplings, the single-qubit baseline and finite-size crossings.

Usage:
    result = find_crossing(curves, kernel_value=f0)
    print(result.gamma_c, result.gamma_c_err)
"""

import itertools
import logging
import math
import warnings
from collections import defaultdict
from typing import Any

import numpy as np

from constants import (
    DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_BOOTSTRAP_SEED,
    DEFAULT_F_BAR_RATIO,
    GAMMA_C_OHMIC,
    OHMIC,
    SUB_OHMIC,
    SUPER_OHMIC,
    XI_C_SUPER,
)
from errors import AmbiguousCrossing, AnalysisError, InvalidParam, NoCrossing
from kernels import KernelEvaluator
from models import (
    CriticalCoupling,
    EnvironmentSpec,
    FidelityCurve,
    FidelityEstimate,
    KernelMethod,
    KernelValue,
    PairCrossing,
    ThresholdResult,
)
from utils import config_section

logger = logging.getLogger(__name__)


# =============================================================================
# Critical couplings
# =============================================================================


def _require_exponent(env: EnvironmentSpec, s: float, name: str) -> None:
    if env.s != s:
        raise InvalidParam(f"{name} needs s = {s}, got s = {env.s}")


def _onsite_thermal(
    env: EnvironmentSpec, evaluator: KernelEvaluator | None, check_regime: bool
) -> KernelValue:
    """F(Delta; 0; beta), by closed form outside the regime guard when asked."""
    if not check_regime:
        unguarded = KernelEvaluator(max_beta_over_delta=math.inf, distance_margin=0.0)
        return unguarded.f_closed_form(env, 0.0, use_beta=True)
    return (evaluator or KernelEvaluator()).f_value(env, 0.0, use_beta=True)


def lambda_c_scaling_super(env: EnvironmentSpec) -> float:
    """omega0 sqrt(omega0 beta), the temperature dependence of the super-Ohmic threshold."""
    return env.omega0 * math.sqrt(env.omega0 * env.beta)


def critical_coupling_super(
    env: EnvironmentSpec, evaluator: KernelEvaluator | None = None, check_regime: bool = True
) -> CriticalCoupling:
    """
    Super-Ohmic threshold lambda_c = sqrt(ln(1 + sqrt 2) / F(Delta; 0; beta)).

    Raises:
        InvalidParam: s is not +1/2
    """
    _require_exponent(env, SUPER_OHMIC, "critical_coupling_super")
    kernel = _onsite_thermal(env, evaluator, check_regime)
    return CriticalCoupling(
        lambda_c=math.sqrt(XI_C_SUPER / kernel.value),
        gamma_c=XI_C_SUPER,
        kernel_value=kernel.value,
        kernel_method=kernel.method,
        scaling_form=lambda_c_scaling_super(env),
    )


def ohmic_reduction_ratios() -> dict[str, float]:
    """Ohmic threshold relative to the super-Ohmic one, in gamma and in lambda."""
    gamma_ratio = GAMMA_C_OHMIC / XI_C_SUPER
    return {"gamma": gamma_ratio, "lambda": math.sqrt(gamma_ratio)}


def critical_coupling_ohmic(
    env: EnvironmentSpec,
    f_bar_ratio: float = DEFAULT_F_BAR_RATIO,
    evaluator: KernelEvaluator | None = None,
    check_regime: bool = True,
) -> CriticalCoupling:
    """
    Ohmic threshold lambda_c = sqrt(0.475 / Delta F) with Delta F = F0 / (1 + f_bar_ratio).

    The reported gamma_c is on the lambda^2 Delta F axis.
    """
    _require_exponent(env, OHMIC, "critical_coupling_ohmic")
    if f_bar_ratio <= -1:
        raise InvalidParam(f"f_bar_ratio must exceed -1, got {f_bar_ratio}")
    kernel = _onsite_thermal(env, evaluator, check_regime)
    delta_f = kernel.value / (1.0 + f_bar_ratio)
    log_ratio = abs(math.log(env.delta / env.beta)) if env.beta > 0 else math.inf
    ratios = ohmic_reduction_ratios()
    return CriticalCoupling(
        lambda_c=math.sqrt(GAMMA_C_OHMIC / delta_f),
        gamma_c=GAMMA_C_OHMIC,
        kernel_value=delta_f,
        kernel_method=kernel.method,
        scaling_form=env.omega0 / math.sqrt(log_ratio) if log_ratio > 0 else math.inf,
        note=(
            f"F_bar = {f_bar_ratio} Delta F; ratio to super-Ohmic "
            f"{ratios['gamma']:.4f} in gamma, {ratios['lambda']:.4f} in lambda"
        ),
    )


def critical_coupling_subohmic(
    env: EnvironmentSpec, evaluator: KernelEvaluator | None = None, check_regime: bool = True
) -> CriticalCoupling:
    """
    Conventional sub-Ohmic threshold lambda_c = [2 ln(1 + sqrt 2) omega0 / Delta]^(1/2).

    Only the dependence sqrt(omega0 / Delta) is meaningful. The number borrows
    the super-Ohmic constant and the leading on-site term Delta / (2 omega0),
    so it does not move with beta. With check_regime the full-kernel value of
    critical_coupling_subohmic_full is added to the note.

    Raises:
        InvalidParam: s is not -1/2
    """
    _require_exponent(env, SUB_OHMIC, "critical_coupling_subohmic")
    leading = env.delta / (2.0 * env.omega0)
    note = "constant borrowed from the super-Ohmic model"
    if check_regime:
        full = critical_coupling_subohmic_full(env, evaluator)
        note += f"; full on-site kernel gives lambda_c = {full.lambda_c:.6g}"
    return CriticalCoupling(
        lambda_c=math.sqrt(XI_C_SUPER / leading),
        gamma_c=XI_C_SUPER,
        kernel_value=leading,
        kernel_method=KernelMethod.CLOSED_FORM,
        scaling_form=math.sqrt(env.omega0 / env.delta),
        scaling_only=True,
        note=note,
    )


def critical_coupling_subohmic_full(
    env: EnvironmentSpec, evaluator: KernelEvaluator | None = None, check_regime: bool = True
) -> CriticalCoupling:
    """Sub-Ohmic threshold scale with the full on-site kernel F(Delta; 0; beta)."""
    _require_exponent(env, SUB_OHMIC, "critical_coupling_subohmic_full")
    kernel = _onsite_thermal(env, evaluator, check_regime)
    return CriticalCoupling(
        lambda_c=math.sqrt(XI_C_SUPER / kernel.value),
        gamma_c=XI_C_SUPER,
        kernel_value=kernel.value,
        kernel_method=kernel.method,
        scaling_form=math.sqrt(env.omega0 / env.delta),
        scaling_only=True,
        note="constant borrowed from the super-Ohmic model, full on-site kernel",
    )


def critical_coupling(env: EnvironmentSpec, **kwargs: Any) -> CriticalCoupling:
    """Dispatch on the spectral exponent."""
    dispatch = {
        SUPER_OHMIC: critical_coupling_super,
        OHMIC: critical_coupling_ohmic,
        SUB_OHMIC: critical_coupling_subohmic,
    }
    if env.s not in dispatch:
        raise InvalidParam(f"no threshold estimate for s = {env.s}")
    return dispatch[env.s](env, **kwargs)


# =============================================================================
# Single qubit
# =============================================================================


def fidelity_from_gamma(gamma: float) -> float:
    """1 / (1 + tanh(gamma / 2)) for gamma = lambda^2 F(Delta; 0; beta)."""
    if gamma < 0:
        raise InvalidParam(f"gamma must be >= 0, got {gamma}")
    return 1.0 / (1.0 + math.tanh(gamma / 2.0))


def single_qubit_fidelity(
    lambda_coupling: float, env: EnvironmentSpec, evaluator: KernelEvaluator | None = None
) -> float:
    """Fidelity of one unprotected qubit coupled with strength lambda."""
    if lambda_coupling < 0:
        raise InvalidParam(f"lambda must be >= 0, got {lambda_coupling}")
    if lambda_coupling == 0:
        return 1.0
    f0 = (evaluator or KernelEvaluator()).f_value(env, 0.0, use_beta=True).value
    return fidelity_from_gamma(lambda_coupling**2 * f0)


# =============================================================================
# Crossings
# =============================================================================


def curves_from_estimates(estimates: list[FidelityEstimate]) -> list[FidelityCurve]:
    """Group estimates by size into curves ordered by gamma."""
    grouped: dict[tuple[int, int], list[FidelityEstimate]] = defaultdict(list)
    for estimate in estimates:
        grouped[estimate.size].append(estimate)
    return [FidelityCurve.from_estimates(size, grouped[size]) for size in sorted(grouped)]


def _crossings(
    ga: np.ndarray, fa: np.ndarray, gb: np.ndarray, fb: np.ndarray
) -> list[float]:
    """Zeros of the interpolated difference fa - fb on the common range."""
    lo, hi = max(ga[0], gb[0]), min(ga[-1], gb[-1])
    if hi <= lo:
        return []
    grid = np.union1d(ga, gb)
    grid = grid[(grid >= lo) & (grid <= hi)]
    diff = np.interp(grid, ga, fa) - np.interp(grid, gb, fb)

    found = []
    for k in range(grid.size - 1):
        d0, d1 = diff[k], diff[k + 1]
        if d0 == 0:
            found.append(float(grid[k]))
        elif d0 * d1 < 0:
            found.append(float(grid[k] - d0 * (grid[k + 1] - grid[k]) / (d1 - d0)))
    if diff[-1] == 0:
        found.append(float(grid[-1]))
    return found


def _weighted_mean(values: np.ndarray, errors: np.ndarray) -> float:
    """Inverse-variance mean; plain mean unless every error is positive and finite."""
    if np.all(np.isfinite(errors)) and np.all(errors > 0):
        weights = 1.0 / errors**2
        return float((weights * values).sum() / weights.sum())
    return float(values.mean())


def find_crossing(
    curves: list[FidelityCurve],
    n_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
    seed: int = DEFAULT_BOOTSTRAP_SEED,
    kernel_value: float | None = None,
    method_note: str = "",
) -> ThresholdResult:
    """
    Threshold from the crossings of fidelity curves of different sizes.

    Each pair of sizes is compared on the union of their gamma grids. A pair
    crossing more than once is reported and the crossing nearest the others
    is kept. Errors come from bootstrap resamples that perturb every point by
    its stderr.

    Args:
        curves: At least two curves of distinct sizes
        n_resamples: Bootstrap resamples
        seed: Root seed of the resample substreams
        kernel_value: F(Delta; 0; beta), to convert gamma_c back to lambda_c
        method_note: Appended to the estimator description

    Raises:
        AnalysisError: fewer than two curves or repeated sizes
        NoCrossing: no pair of curves crosses
    """
    if len(curves) < 2:
        raise AnalysisError(f"need at least two curves, got {len(curves)}")
    if n_resamples < 2:
        raise AnalysisError(f"need at least two bootstrap resamples, got {n_resamples}")
    curves = sorted(curves, key=lambda c: c.size)
    sizes = [c.size for c in curves]
    if len(set(sizes)) != len(sizes):
        raise AnalysisError(f"curve sizes repeat: {sizes}")

    arrays = [(c.gammas, c.fidelities) for c in curves]
    candidates = {}
    for i, j in itertools.combinations(range(len(curves)), 2):
        found = _crossings(*arrays[i], *arrays[j])
        if found:
            candidates[(i, j)] = found
        else:
            logger.info(f"Curves {sizes[i]} and {sizes[j]} do not cross")
    if not candidates:
        raise NoCrossing(f"no pair among sizes {sizes} crosses on the common gamma range")

    single = [found[0] for found in candidates.values() if len(found) == 1]
    reference = float(np.mean(single or [g for found in candidates.values() for g in found]))
    chosen: dict[tuple[int, int], float] = {}
    for (i, j), found in candidates.items():
        if len(found) > 1:
            warnings.warn(
                f"curves {sizes[i]} and {sizes[j]} cross {len(found)} times; "
                f"keeping the crossing nearest {reference:.4g}",
                AmbiguousCrossing,
                stacklevel=2,
            )
        chosen[(i, j)] = min(found, key=lambda g: abs(g - reference))

    pairs = list(chosen)
    gammas = np.array([chosen[p] for p in pairs])
    samples = np.full((n_resamples, len(pairs)), np.nan)
    if any(np.any(c.stderrs > 0) for c in curves):
        for b, child in enumerate(np.random.SeedSequence(seed).spawn(n_resamples)):
            rng = np.random.default_rng(child)
            perturbed = [
                (c.gammas, c.fidelities + rng.normal(0.0, c.stderrs)) for c in curves
            ]
            for k, (i, j) in enumerate(pairs):
                found = _crossings(*perturbed[i], *perturbed[j])
                if found:
                    samples[b, k] = min(found, key=lambda g: abs(g - gammas[k]))

    pair_errors = np.zeros(len(pairs))
    for k in range(len(pairs)):
        column = samples[:, k][np.isfinite(samples[:, k])]
        if column.size >= 2:
            pair_errors[k] = column.std(ddof=1)

    gamma_c = _weighted_mean(gammas, pair_errors)
    gamma_c_err = 0.0
    if np.any(pair_errors > 0):
        filled = np.where(np.isfinite(samples), samples, gammas)
        means = np.array([_weighted_mean(row, pair_errors) for row in filled])
        gamma_c_err = float(means.std(ddof=1))

    crossings = [
        PairCrossing(sizes[i], sizes[j], float(g), float(e))
        for (i, j), g, e in zip(pairs, gammas, pair_errors, strict=True)
    ]
    note = (
        f"pairwise linear interpolation, inverse-variance mean over {len(pairs)} pairs, "
        f"{n_resamples} bootstrap resamples (seed {seed})"
    )
    if method_note:
        note = f"{note}; {method_note}"
    lambda_c = math.sqrt(gamma_c / kernel_value) if kernel_value else None
    logger.info(f"gamma_c = {gamma_c:.6g} +- {gamma_c_err:.2g} from {len(pairs)} crossings")
    return ThresholdResult(
        gamma_c=gamma_c,
        gamma_c_err=gamma_c_err,
        pair_crossings=crossings,
        method_note=note,
        lambda_c=lambda_c,
    )


def find_crossing_from_config(curves: list[FidelityCurve], config: dict[str, Any], **kwargs: Any) -> ThresholdResult:
    """find_crossing with bootstrap settings from the analysis section of config.yaml."""
    section = config_section(config, "analysis")
    return find_crossing(
        curves,
        n_resamples=section.get("bootstrap_resamples", DEFAULT_BOOTSTRAP_RESAMPLES),
        seed=section.get("bootstrap_seed", DEFAULT_BOOTSTRAP_SEED),
        **kwargs,
    )
