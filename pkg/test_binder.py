"""Tests for the row-transfer engine against exhaustive enumeration."""

import cmath
import warnings

import numpy as np
import pytest

from analysis import find_crossing
from engines.base import ALL_PATTERNS, assemble_full
from engines.binder import BinderEngine, binder_fidelity, binder_partition
from engines.brute_force import BruteForceEngine
from errors import AmbiguousCrossing, EngineError, WidthTooLarge
from lattice import SurfaceGeometry
from models import FidelityCurve, ModelCouplings, ModelVariant


@pytest.fixture
def binder():
    return BinderEngine()


@pytest.fixture
def brute():
    return BruteForceEngine()


def general(j: complex) -> ModelCouplings:
    return ModelCouplings(ModelVariant.GENERAL_KERNEL, j_complex=j)


class TestAgreementWithBruteForce:
    """Binder and brute force sum the same weights."""

    @pytest.mark.parametrize("size", [(2, 2), (3, 2), (2, 3), (1, 3), (3, 1)])
    def test_complex_coupling(self, binder, brute, size):
        """Z and B agree for a generic complex coupling."""
        geom = SurfaceGeometry(*size)
        model = general(0.18 - 0.11j)
        exact = brute.amplitudes(geom, model, 0.8)
        transfer = binder.amplitudes(geom, model, 0.8)
        assert transfer.ln_z == pytest.approx(exact.ln_z, rel=1e-10)
        assert abs(transfer.b_corr - exact.b_corr) < 1e-10

    @pytest.mark.parametrize("eta", [0.0, 0.1, 0.25])
    def test_super_imag(self, binder, brute, eta):
        geom = SurfaceGeometry(2, 2)
        model = ModelCouplings(ModelVariant.SUPER_IMAG, eta=eta)
        exact = brute.amplitudes(geom, model, 1.1)
        transfer = binder.amplitudes(geom, model, 1.1)
        assert transfer.fidelity == pytest.approx(exact.fidelity, rel=1e-10)

    def test_every_pattern(self, binder, brute):
        """Each of the sixteen amplitudes matches up to the common scale."""
        geom = SurfaceGeometry(2, 2)
        model = general(0.3 + 0.2j)
        exact = brute.amplitudes(geom, model, 0.6)
        c_table, log_scale = binder.all_amplitudes(geom, model, 0.6)
        for pattern in ALL_PATTERNS:
            expected = exact.c_table[pattern] * cmath.exp(exact.log_scale - log_scale)
            assert c_table[pattern] == pytest.approx(expected, rel=1e-10)

    def test_reduced_matches_full(self, binder):
        """Symmetry-reduced assembly equals the sum over all patterns."""
        geom = SurfaceGeometry(3, 3)
        model = general(0.1 + 0.2j)
        reduced = binder.amplitudes(geom, model, 0.9)
        full = assemble_full(*binder.all_amplitudes(geom, model, 0.9))
        assert reduced.ln_z == pytest.approx(full.ln_z, rel=1e-10)
        assert abs(reduced.b_corr - full.b_corr) < 1e-10

    def test_observables_match_exact_moments(self, binder, brute):
        """Finite-difference energy and heat capacity agree with exact moments."""
        geom = SurfaceGeometry(2, 2)
        model = ModelCouplings(ModelVariant.SUPER_LOCAL)
        exact = brute.observables(geom, model, 0.7)
        numeric = binder.observables(geom, model, 0.7)
        assert numeric.energy.real == pytest.approx(exact.energy.real, rel=1e-6)
        assert numeric.heat_capacity.real == pytest.approx(exact.heat_capacity.real, rel=1e-3)


class TestBinderEngine:
    """Engine limits and helpers."""

    def test_large_strip(self, binder):
        """Lattices far beyond brute force stay finite."""
        pair = binder.amplitudes(SurfaceGeometry(6, 6), ModelCouplings(ModelVariant.SUPER_LOCAL), 0.88)
        assert 0.5 < pair.fidelity < 1.0

    def test_fidelity_falls_with_size_in_ordered_phase(self, binder):
        """Above the critical point larger codes lose more fidelity."""
        model = ModelCouplings(ModelVariant.SUPER_LOCAL)
        small = binder.amplitudes(SurfaceGeometry(3, 3), model, 1.5).fidelity
        large = binder.amplitudes(SurfaceGeometry(5, 5), model, 1.5).fidelity
        assert large < small

    def test_width_too_large(self):
        engine = BinderEngine({"engines": {"binder": {"max_width": 2}}})
        with pytest.raises(WidthTooLarge):
            engine.amplitudes(SurfaceGeometry(3, 2), ModelCouplings(ModelVariant.SUPER_LOCAL), 0.5)

    def test_long_range_rejected(self, binder):
        model = ModelCouplings(ModelVariant.OHMIC_LONGRANGE, f_bar=0.72)
        with pytest.raises(EngineError):
            binder.amplitudes(SurfaceGeometry(2, 2), model, 0.5)

    def test_binder_partition_ratios(self, brute):
        """Single-pattern amplitudes keep the ratios of the exhaustive sums."""
        geom = SurfaceGeometry(2, 2)
        exact = brute.amplitudes(geom, general(0.2j), 0.5)
        ref_value, ref_scale = binder_partition(geom, 0.2j, 0.5, (1, 1, 1, 1))
        value, scale = binder_partition(geom, 0.2j, 0.5, (1, 1, -1, -1))
        ratio = value * cmath.exp(scale - ref_scale) / ref_value
        expected = exact.c_table[(1, 1, -1, -1)] / exact.c_table[(1, 1, 1, 1)]
        assert ratio == pytest.approx(expected, rel=1e-10)

    def test_binder_fidelity(self, brute):
        """The module shortcut reports the same fidelity as enumeration."""
        geom = SurfaceGeometry(2, 3)
        report = binder_fidelity(geom, 0.1 - 0.05j, 0.6)
        assert report.fidelity == pytest.approx(brute.amplitudes(geom, general(0.1 - 0.05j), 0.6).fidelity, rel=1e-10)
        assert binder_fidelity(geom, 0j, 0.0).fidelity == pytest.approx(1.0)


class TestImaginaryCouplingShift:
    """The imaginary nearest-neighbour coupling moves the threshold down."""

    @staticmethod
    def crossing(engine: BinderEngine, model: ModelCouplings) -> float:
        gammas = np.round(np.arange(0.55, 1.051, 0.025), 3)
        curves = [
            FidelityCurve(
                (n, n),
                [(g, engine.amplitudes(SurfaceGeometry(n, n), model, g).fidelity, 0.0) for g in gammas],
            )
            for n in (2, 3, 4)
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AmbiguousCrossing)
            return find_crossing(curves).gamma_c

    @pytest.mark.slow
    def test_eta_lowers_crossing(self, binder):
        local = self.crossing(binder, ModelCouplings(ModelVariant.SUPER_IMAG, eta=0.0))
        shifted = self.crossing(binder, ModelCouplings(ModelVariant.SUPER_IMAG, eta=0.1))
        assert shifted < local


def test_fidelity_near_half_deep_in_ordered_phase(binder):
    """Exact fidelity at xi = 2 on 6 x 6 is within 0.05 of 1/2."""
    fidelity = binder.amplitudes(SurfaceGeometry(6, 6), ModelCouplings(ModelVariant.SUPER_LOCAL), 2.0).fidelity
    assert 0.5 <= fidelity < 0.55
