"""Tests for tool classes."""

import math

import pytest

from tools import FidelityTool, KernelTool, ThresholdTool


@pytest.fixture
def test_config():
    """Create test configuration."""
    return {
        "logging": {"level": "WARNING", "file": None},
        "kernels": {"tol": 1e-9},
        "ohmic": {"f_bar_ratio": 0.72, "phi_bar_ratio": 0.0},
    }


# Super-Ohmic bath with F(Delta; 0; beta) = 1
UNIT_BATH = {"s": 0.5, "beta": 1 / math.pi, "delta": 20.0}


class TestBaseTool:
    """Tests for the shared tool plumbing."""

    def test_evaluator_is_lazy_and_cached(self, test_config):
        tool = KernelTool(test_config)
        assert tool._evaluator is None
        evaluator = tool.get_evaluator()
        assert evaluator is tool.get_evaluator()
        assert evaluator.tol == 1e-9

    def test_make_env_drops_none(self, test_config):
        env = KernelTool(test_config).make_env(s=0.5, beta=0.1, delta=10.0, v=1.0, cutoff=None)
        assert math.isinf(env.cutoff)


class TestKernelTool:
    """Tests for KernelTool class."""

    def test_evaluate_kernels(self, test_config):
        result = KernelTool(test_config).evaluate_kernels(
            s=0.5, beta=0.1, delta=10.0, distances=[3.0]
        )
        assert "[*] **Kernels**" in result
        assert "**r = 0**" in result
        assert "**r = 3**" in result
        assert "F_quad" in result

    def test_invalid_environment(self, test_config):
        result = KernelTool(test_config).evaluate_kernels(s=0.5, beta=0.1, delta=-1.0)
        assert "[ERROR] Invalid input" in result
        assert "delta" in result

    def test_reduce_super_local(self, test_config):
        result = KernelTool(test_config).reduce_couplings(
            lambda_coupling=1.0, variant="super_local", **UNIT_BATH
        )
        assert "[OK] **super_local**" in result
        assert "**gamma:** 1" in result or "**gamma:** 0.99999" in result
        assert "**J:**" not in result

    def test_reduce_ohmic_uses_configured_ratio(self, test_config):
        result = KernelTool(test_config).reduce_couplings(
            s=0.0, beta=0.1, delta=10.0, lambda_coupling=1.0, variant="ohmic_longrange"
        )
        assert "**Delta F:**" in result
        assert "**Phi_bar:** 0" in result

    def test_variant_mismatch(self, test_config):
        result = KernelTool(test_config).reduce_couplings(
            s=0.0, beta=0.1, delta=10.0, lambda_coupling=1.0, variant="super_local"
        )
        assert "[ERROR]" in result
        assert "VariantMismatch" in result

    def test_unknown_variant(self, test_config):
        result = KernelTool(test_config).reduce_couplings(
            lambda_coupling=1.0, variant="quantum_foam", **UNIT_BATH
        )
        assert "[ERROR]" in result


class TestFidelityTool:
    """Tests for FidelityTool class."""

    def test_small_lattice_is_exact(self, test_config):
        result = FidelityTool(test_config).compute_fidelity(nx=2, ny=2, gamma=0.5)
        assert "[OK] **Fidelity 2x2**" in result
        assert "**Engine:** brute" in result
        assert "+-" not in result

    def test_monte_carlo_reports_acceptance(self, test_config):
        result = FidelityTool(test_config).compute_fidelity(
            nx=3, ny=3, gamma=0.5, engine="mc", seed=11, n_sweeps=2000
        )
        assert "**Engine:** mc" in result
        assert "**Acceptance:**" in result
        assert "**Seed:** 11" in result

    def test_complex_couplings_rejected_by_mc(self, test_config):
        result = FidelityTool(test_config).compute_fidelity(
            nx=3, ny=3, gamma=0.5, variant="super_imag", eta=0.1, engine="mc"
        )
        assert "[ERROR] Invalid input" in result

    def test_binder_with_imaginary_coupling(self, test_config):
        result = FidelityTool(test_config).compute_fidelity(
            nx=3, ny=3, gamma=0.5, variant="super_imag", eta=0.1, engine="binder"
        )
        assert "**Engine:** binder" in result

    def test_single_qubit_zero_coupling(self, test_config):
        result = FidelityTool(test_config).single_qubit_fidelity(
            lambda_coupling=0.0, **UNIT_BATH
        )
        assert result.endswith(": 1")

    def test_single_qubit_negative_coupling(self, test_config):
        result = FidelityTool(test_config).single_qubit_fidelity(
            lambda_coupling=-1.0, **UNIT_BATH
        )
        assert "[ERROR]" in result
        assert "InvalidParam" in result


class TestThresholdTool:
    """Tests for ThresholdTool class."""

    def test_super_ohmic(self, test_config):
        result = ThresholdTool(test_config).critical_coupling(**UNIT_BATH)
        assert "**lambda_c:** 0.9388" in result
        assert "scaling only" not in result

    def test_ohmic_note(self, test_config):
        result = ThresholdTool(test_config).critical_coupling(s=0.0, beta=0.1, delta=10.0)
        assert "**gamma_c:** 0.47" in result
        assert "F_bar = 0.72 Delta F" in result

    def test_subohmic_is_scaling_only(self, test_config):
        result = ThresholdTool(test_config).critical_coupling(s=-0.5, beta=0.1, delta=10.0)
        assert "(scaling only)" in result

    def test_untabulated_exponent(self, test_config):
        result = ThresholdTool(test_config).critical_coupling(s=0.25, beta=0.1, delta=10.0)
        assert "[ERROR]" in result

    def test_describe_presets(self, test_config):
        result = ThresholdTool(test_config).describe_presets()
        assert "**superohmic-fig2**" in result
        assert "variant: ohmic_longrange" in result
