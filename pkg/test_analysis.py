"""Tests for critical couplings and crossing extraction."""

import math
import warnings

import numpy as np
import pytest

from analysis import (
    critical_coupling,
    critical_coupling_ohmic,
    critical_coupling_subohmic,
    critical_coupling_subohmic_full,
    critical_coupling_super,
    curves_from_estimates,
    find_crossing,
    find_crossing_from_config,
    fidelity_from_gamma,
    lambda_c_scaling_super,
    ohmic_reduction_ratios,
    single_qubit_fidelity,
)
from constants import GAMMA_C_OHMIC, XI_C_SUPER
from engines.binder import BinderEngine
from errors import AmbiguousCrossing, AnalysisError, InvalidParam, NoCrossing
from kernels import KernelEvaluator
from lattice import SurfaceGeometry
from models import (
    EngineKind,
    EnvironmentSpec,
    FidelityCurve,
    FidelityEstimate,
    KernelMethod,
    ModelCouplings,
    ModelVariant,
    RunConfig,
)


def super_env(beta: float = 1 / math.pi, **overrides) -> EnvironmentSpec:
    """Super-Ohmic bath with F(Delta; 0; beta) = 1 at the default beta."""
    params = {"s": 0.5, "beta": beta, "delta": 20.0, "v": 1.0}
    params.update(overrides)
    return EnvironmentSpec(**params)


def line(size, gammas, intercept, slope, stderr=0.0) -> FidelityCurve:
    return FidelityCurve(size, [(g, intercept + slope * g, stderr) for g in gammas])


GRID = [0.0, 0.25, 0.5, 0.75, 1.0]


class TestCriticalCouplings:
    """Closed-form thresholds."""

    def test_super_unit_kernel(self):
        result = critical_coupling_super(super_env())
        assert result.kernel_value == pytest.approx(1.0)
        assert result.lambda_c == pytest.approx(math.sqrt(XI_C_SUPER))
        assert result.lambda_c == pytest.approx(0.9388, abs=1e-4)
        assert result.gamma_c == pytest.approx(0.8814, abs=1e-4)
        assert result.kernel_method is KernelMethod.CLOSED_FORM

    def test_super_square_root_in_beta(self):
        base = critical_coupling_super(super_env()).lambda_c
        quadrupled = critical_coupling_super(super_env(beta=4 / math.pi)).lambda_c
        assert quadrupled / base == pytest.approx(2.0)
        halved = critical_coupling_super(super_env(beta=0.5 / math.pi)).lambda_c
        assert base / halved == pytest.approx(math.sqrt(2.0))

    def test_super_gamma_round_trip(self):
        """lambda_c^2 F returns the universal constant for any beta and omega0."""
        for beta, omega0 in [(0.05, 1.0), (0.2, 2.0), (0.7, 0.5)]:
            env = super_env(beta=beta, omega0=omega0)
            result = critical_coupling_super(env)
            assert result.lambda_c**2 * result.kernel_value == pytest.approx(XI_C_SUPER, rel=1e-12)

    def test_super_scaling_form(self):
        env = super_env(beta=0.25, omega0=2.0)
        assert lambda_c_scaling_super(env) == pytest.approx(2.0 * math.sqrt(0.5))

    def test_super_out_of_regime_uses_quadrature(self):
        """A hot bath outside the closed-form regime falls back to quadrature."""
        env = super_env(beta=5.0, cutoff=100.0)
        result = critical_coupling_super(env)
        assert result.kernel_method is KernelMethod.QUADRATURE
        assert result.lambda_c > 0

    def test_ohmic_example(self):
        """Delta / beta = e with F_bar = 0.72 Delta F."""
        env = EnvironmentSpec(s=0.0, beta=1.0, delta=math.e, v=1.0)
        result = critical_coupling_ohmic(env, check_regime=False)
        assert result.kernel_value == pytest.approx(1 / (math.pi * 1.72))
        assert result.lambda_c == pytest.approx(math.sqrt(0.475 * math.pi * 1.72))
        assert result.lambda_c == pytest.approx(1.602, abs=1e-3)
        assert result.gamma_c == GAMMA_C_OHMIC

    def test_ohmic_regime_enforced(self):
        env = EnvironmentSpec(s=0.0, beta=1.0, delta=math.e, v=1.0)
        result = critical_coupling_ohmic(env)
        assert result.kernel_method is KernelMethod.QUADRATURE

    def test_ohmic_reduction_ratios(self):
        ratios = ohmic_reduction_ratios()
        assert ratios["gamma"] == pytest.approx(0.539, abs=1e-3)
        assert ratios["lambda"] == pytest.approx(0.734, abs=1e-3)

    def test_subohmic_scaling(self):
        """Delta -> 4 Delta at fixed beta/Delta halves lambda_c; omega0 -> 4 omega0 doubles it."""
        env = EnvironmentSpec(s=-0.5, beta=0.1, delta=10.0, v=1.0)
        base = critical_coupling_subohmic(env)
        assert base.scaling_only
        wider = critical_coupling_subohmic(env.model_copy(update={"delta": 40.0, "beta": 0.4}))
        assert wider.lambda_c / base.lambda_c == pytest.approx(0.5)
        faster = critical_coupling_subohmic(env.model_copy(update={"omega0": 4.0}))
        assert faster.lambda_c / base.lambda_c == pytest.approx(2.0)

    def test_subohmic_weak_beta_dependence(self):
        env = EnvironmentSpec(s=-0.5, beta=0.01, delta=10.0, v=1.0)
        cold = critical_coupling_subohmic(env).lambda_c
        warm = critical_coupling_subohmic(env.model_copy(update={"beta": 0.1})).lambda_c
        assert abs(warm - cold) / cold < 0.1

    def test_subohmic_conventional_value(self):
        """lambda_c = [ln(1 + sqrt 2) / F0]^(1/2) with the leading on-site term F0 = Delta / (2 omega0)."""
        env = EnvironmentSpec(s=-0.5, beta=0.1, delta=10.0, v=1.0)
        result = critical_coupling_subohmic(env)
        assert result.lambda_c == pytest.approx(math.sqrt(2.0 * XI_C_SUPER / 10.0))
        assert result.kernel_value == pytest.approx(5.0)
        assert result.kernel_method is KernelMethod.CLOSED_FORM
        assert "full on-site kernel" in result.note

    def test_subohmic_full_kernel_variant(self):
        env = EnvironmentSpec(s=-0.5, beta=0.1, delta=10.0, v=1.0)
        evaluator = KernelEvaluator()
        result = critical_coupling_subohmic_full(env, evaluator)
        onsite = evaluator.f_value(env, 0.0).value
        assert result.kernel_value == pytest.approx(onsite)
        assert result.lambda_c == pytest.approx(math.sqrt(XI_C_SUPER / onsite))
        assert result.scaling_only
        assert f"{result.lambda_c:.6g}" in critical_coupling_subohmic(env, evaluator).note

    def test_subohmic_without_regime_check(self):
        env = EnvironmentSpec(s=-0.5, beta=0.1, delta=10.0, v=1.0)
        result = critical_coupling_subohmic(env, check_regime=False)
        assert result.note == "constant borrowed from the super-Ohmic model"

    def test_wrong_exponent(self):
        with pytest.raises(InvalidParam):
            critical_coupling_ohmic(super_env())

    def test_dispatch(self):
        assert critical_coupling(super_env()).gamma_c == XI_C_SUPER


class TestSingleQubit:
    """Unprotected-qubit baseline."""

    def test_zero_coupling(self):
        assert single_qubit_fidelity(0.0, super_env()) == 1.0

    def test_tanh_of_one(self):
        assert fidelity_from_gamma(2.0) == pytest.approx(1 / (1 + math.tanh(1.0)))
        assert fidelity_from_gamma(2.0) == pytest.approx(0.56767, abs=1e-5)

    def test_saturates_at_half(self):
        assert fidelity_from_gamma(80.0) == pytest.approx(0.5)

    def test_strictly_decreasing(self):
        env = super_env()
        values = [single_qubit_fidelity(lam, env) for lam in np.linspace(0.1, 3.0, 12)]
        assert all(b < a for a, b in zip(values, values[1:], strict=False))

    def test_uses_kernel(self):
        """With F = 1, lambda = sqrt 2 gives gamma = 2."""
        assert single_qubit_fidelity(math.sqrt(2.0), super_env()) == pytest.approx(
            fidelity_from_gamma(2.0)
        )

    def test_negative_coupling(self):
        with pytest.raises(InvalidParam):
            single_qubit_fidelity(-0.1, super_env())


class TestFindCrossing:
    """Crossing extraction from fidelity curves."""

    def test_two_lines(self):
        """0.9 - 0.2 gamma and 1.0 - 0.4 gamma cross at 0.5."""
        result = find_crossing([line((4, 4), GRID, 0.9, -0.2), line((6, 6), GRID, 1.0, -0.4)])
        assert result.gamma_c == pytest.approx(0.5)
        assert result.gamma_c_err == 0.0
        assert len(result.pair_crossings) == 1
        assert result.pair_crossings[0].size_a == (4, 4)

    def test_order_invariance(self):
        curves = [
            line((4, 4), GRID, 0.9, -0.2, 0.01),
            line((6, 6), GRID, 1.0, -0.4, 0.01),
            line((8, 8), GRID, 1.1, -0.6, 0.01),
        ]
        forward = find_crossing(curves)
        backward = find_crossing(curves[::-1])
        assert forward.gamma_c == backward.gamma_c
        assert forward.gamma_c_err == backward.gamma_c_err

    def test_constant_offset_invariance(self):
        plain = find_crossing([line((4, 4), GRID, 0.9, -0.2), line((6, 6), GRID, 1.0, -0.4)])
        shifted = find_crossing([line((4, 4), GRID, 0.8, -0.2), line((6, 6), GRID, 0.9, -0.4)])
        assert shifted.gamma_c == pytest.approx(plain.gamma_c)

    def test_error_grows_with_stderr(self):
        small = find_crossing(
            [line((4, 4), GRID, 0.9, -0.2, 0.002), line((6, 6), GRID, 1.0, -0.4, 0.002)]
        )
        large = find_crossing(
            [line((4, 4), GRID, 0.9, -0.2, 0.01), line((6, 6), GRID, 1.0, -0.4, 0.01)]
        )
        assert 0 < small.gamma_c_err < large.gamma_c_err
        assert min(c.gamma for c in large.pair_crossings) <= large.gamma_c
        assert large.gamma_c <= max(c.gamma for c in large.pair_crossings)

    def test_lambda_back_conversion(self):
        result = find_crossing(
            [line((4, 4), GRID, 0.9, -0.2), line((6, 6), GRID, 1.0, -0.4)], kernel_value=2.0
        )
        assert result.lambda_c == pytest.approx(0.5)

    def test_no_crossing(self):
        with pytest.raises(NoCrossing):
            find_crossing([line((4, 4), GRID, 0.9, -0.2), line((6, 6), GRID, 0.8, -0.2)])

    def test_single_curve(self):
        with pytest.raises(AnalysisError):
            find_crossing([line((4, 4), GRID, 0.9, -0.2)])

    def test_ambiguous(self):
        """A wiggling pair warns and keeps the crossing nearest the others."""
        points = [(0.0, 1.0), (0.25, 0.8), (0.5, 0.9), (0.75, 0.7), (1.0, 0.6)]
        wiggle = FidelityCurve((6, 6), [(g, f, 0.0) for g, f in points])
        flat = line((4, 4), GRID, 0.85, 0.0)
        third = line((8, 8), GRID, 1.1, -0.5)
        with pytest.warns(AmbiguousCrossing):
            result = find_crossing([flat, wiggle, third])
        assert len(result.pair_crossings) == 3

    def test_config_settings(self):
        curves = [line((4, 4), GRID, 0.9, -0.2, 0.01), line((6, 6), GRID, 1.0, -0.4, 0.01)]
        config = {"analysis": {"bootstrap_resamples": 20, "bootstrap_seed": 3}}
        result = find_crossing_from_config(curves, config)
        assert "20 bootstrap resamples (seed 3)" in result.method_note

    def test_curves_from_estimates(self):
        estimates = [
            FidelityEstimate(0.9 - 0.1 * g, 0.0, 0.0, 0.0, 1.0, EngineKind.BINDER, size, g)
            for size in [(6, 6), (4, 4)]
            for g in (0.3, 0.1, 0.2)
        ]
        curves = curves_from_estimates(estimates)
        assert [c.size for c in curves] == [(4, 4), (6, 6)]
        assert list(curves[0].gammas) == [0.1, 0.2, 0.3]

    @pytest.mark.slow
    def test_super_local_curves_bracket_onsager_point(self):
        """Exact curves of distance 2..5 patches cross at ln(1 + sqrt 2)."""
        engine = BinderEngine()
        model = ModelCouplings(ModelVariant.SUPER_LOCAL)
        sizes = RunConfig(env=super_env(), variant="super_local", sizes=[2, 3, 4, 5]).sizes
        assert sizes == [(2, 1), (3, 2), (4, 3), (5, 4)]
        gammas = np.round(np.arange(0.70, 1.101, 0.025), 3)
        curves = [
            FidelityCurve(
                size,
                [(g, engine.amplitudes(SurfaceGeometry(*size), model, g).fidelity, 0.0) for g in gammas],
            )
            for size in sizes
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AmbiguousCrossing)
            result = find_crossing(curves)
        assert 0.83 <= result.gamma_c <= 0.93
        for crossing in result.pair_crossings:
            assert crossing.gamma == pytest.approx(XI_C_SUPER, abs=0.02)

    @pytest.mark.slow
    def test_square_patches_cross_below_onsager_point(self):
        """Square grids carry an extra row of qubits and cross lower."""
        engine = BinderEngine()
        model = ModelCouplings(ModelVariant.SUPER_LOCAL)
        gammas = np.round(np.arange(0.70, 1.101, 0.025), 3)
        curves = [
            FidelityCurve(
                (n, n),
                [(g, engine.amplitudes(SurfaceGeometry(n, n), model, g).fidelity, 0.0) for g in gammas],
            )
            for n in (2, 3, 4, 5)
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AmbiguousCrossing)
            result = find_crossing(curves)
        assert result.gamma_c == pytest.approx(0.794, abs=0.02)


def test_kernel_evaluator_is_used():
    """A custom evaluator changes the quadrature settings but not the closed form."""
    evaluator = KernelEvaluator(tol=1e-6)
    assert critical_coupling_super(super_env(), evaluator).lambda_c == pytest.approx(
        math.sqrt(XI_C_SUPER)
    )
