"""Tests for config parsing, experiment orchestration and the command line."""

import json
import math

import pytest
from pydantic import ValidationError

import experiment
from cli import main
from constants import EXIT_CONFIG, EXIT_NO_CROSSING, EXIT_OK, VERSION, XI_C_SUPER
from errors import ConfigError, EngineError, NoCrossing, ParseError
from experiment import ExperimentRunner, list_presets, parse_config
from lattice import SurfaceGeometry
from models import EngineKind, ModelVariant

MINIMAL = """
env:
  s: 0.5
  beta: 0.1
  delta: 10.0
  v: 1.0
variant: super_local
gammas: [0.5, 1.0]
"""


@pytest.fixture
def app_config_path(tmp_path):
    """Application config that keeps logs out of the working directory."""
    path = tmp_path / "app.yaml"
    path.write_text("logging:\n  level: WARNING\n  file: null\n")
    return path


@pytest.fixture
def run_file(tmp_path):
    """Small super_local sweep that brute force finishes quickly."""
    path = tmp_path / "run.yaml"
    path.write_text(MINIMAL + f"sizes: [[2, 2], [2, 3]]\nout_dir: {tmp_path / 'out'}\n")
    return path


def cli(*args, app_config):
    return main([*args, "--app-config", str(app_config)])


class TestParseConfig:
    """YAML run configs."""

    def test_minimal_defaults(self):
        run = parse_config(MINIMAL)
        assert run.engine is EngineKind.AUTO
        assert run.variant is ModelVariant.SUPER_LOCAL
        assert run.gamma_grid() == [0.5, 1.0]
        assert run.schedule.seed == run.seed

    def test_unknown_key(self):
        with pytest.raises(ValidationError):
            parse_config(MINIMAL + "colour: blue\n")

    def test_parse_error_position(self):
        with pytest.raises(ParseError) as info:
            parse_config("env:\n  s: [0.5\nvariant: super_local\n")
        assert info.value.line is not None

    def test_sign_problem_rejected(self):
        text = MINIMAL.replace("s: 0.5", "s: 0.0").replace("super_local", "ohmic_longrange")
        with pytest.raises(ValidationError, match="complex"):
            parse_config(text + "phi_bar_ratio: 0.1\nengine: mc\n")

    def test_variant_exponent_mismatch(self):
        with pytest.raises(ValidationError, match="needs s"):
            parse_config(MINIMAL.replace("super_local", "ohmic_longrange"))

    def test_preset_expands(self):
        run = parse_config(overrides={"preset": "superohmic-fig2"})
        assert run.sizes == [(4, 3), (6, 5), (8, 7)]
        grid = run.gamma_grid()
        assert grid[0] == 0.7
        assert grid[-1] == 1.1
        assert grid[0] < XI_C_SUPER < grid[-1]

    def test_overrides_replace_grid(self):
        run = parse_config(overrides={"preset": "ohmic-fig4", "gammas": [0.45], "seed": 5})
        assert run.gamma_grid() == [0.45]
        assert run.gamma_min is None
        assert run.schedule.seed == 5

    def test_file_layered_on_preset(self):
        run = parse_config("preset: ohmic-fig4\nenv:\n  beta: 0.2\n")
        assert run.env.beta == 0.2
        assert run.env.delta == 10.0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="Unknown preset"):
            parse_config(overrides={"preset": "nope"})

    def test_presets_shipped(self):
        assert set(list_presets()) >= {"superohmic-fig2", "superohmic-eta-fig3", "ohmic-fig4"}


class TestEngineResolution:
    """engine=auto."""

    def runner(self, text: str = MINIMAL) -> ExperimentRunner:
        return ExperimentRunner(parse_config(text))

    def test_small_lattice_uses_brute_force(self):
        assert self.runner().resolve_engine(SurfaceGeometry(2, 2)) is EngineKind.BRUTE

    def test_real_couplings_use_monte_carlo(self):
        assert self.runner().resolve_engine(SurfaceGeometry(4, 4)) is EngineKind.MC

    def test_complex_couplings_use_binder(self):
        text = MINIMAL.replace("super_local", "super_imag") + "eta: 0.1\n"
        runner = self.runner(text)
        assert runner.resolve_engine(SurfaceGeometry(4, 4)) is EngineKind.BINDER
        with pytest.raises(EngineError):
            runner.resolve_engine(SurfaceGeometry(14, 4))

    def test_plan(self):
        runner = self.runner(MINIMAL + "sizes: [2, 5]\n")
        plan = runner.plan()
        assert [p.engine for p in plan] == [EngineKind.BRUTE, EngineKind.MC]
        assert plan[0].work == 2.0**8
        assert plan[1].n_points == 2

    def test_lambda_grid(self):
        """gamma = lambda^2 F(Delta; 0; beta), with F = 1 / (pi beta) here."""
        text = MINIMAL.replace("gammas: [0.5, 1.0]", "lambdas: [0.5]")
        runner = self.runner(text)
        assert runner.gamma_grid() == [pytest.approx(0.25 / (math.pi * 0.1))]


class TestCommandLine:
    """End-to-end runs through main()."""

    def test_sweep_writes_curves(self, run_file, tmp_path, app_config_path):
        assert cli("sweep", "--config", str(run_file), app_config=app_config_path) == EXIT_OK
        lines = (tmp_path / "out" / "curves.csv").read_text().splitlines()
        assert lines[0] == f"# tst {VERSION}"
        assert lines[1] == "size_nx,size_ny,gamma,fidelity,stderr,engine,seed"
        rows = [line.split(",") for line in lines[2:]]
        assert [(r[0], r[1], r[2]) for r in rows] == [
            ("2", "2", "0.5"),
            ("2", "2", "1"),
            ("2", "3", "0.5"),
            ("2", "3", "1"),
        ]
        assert all(r[5] == "brute" for r in rows)
        assert all(r[6] for r in rows)

    def test_deterministic(self, run_file, tmp_path, app_config_path):
        path = tmp_path / "out" / "curves.csv"
        cli("sweep", "--config", str(run_file), app_config=app_config_path)
        first = path.read_bytes()
        cli("sweep", "--config", str(run_file), "--threads", "2", app_config=app_config_path)
        assert path.read_bytes() == first

    def test_dry_run_writes_nothing(self, run_file, tmp_path, app_config_path, capsys):
        code = cli("threshold", "--config", str(run_file), "--dry-run", app_config=app_config_path)
        assert code == EXIT_OK
        plan = json.loads(capsys.readouterr().out)
        assert [s["engine"] for s in plan["sizes"]] == ["brute", "brute"]
        assert not (tmp_path / "out").exists()

    def test_fidelity_single_gamma(self, run_file, tmp_path, app_config_path):
        code = cli("fidelity", "--config", str(run_file), "--gamma", "0.8", app_config=app_config_path)
        assert code == EXIT_OK
        rows = (tmp_path / "out" / "curves.csv").read_text().splitlines()[2:]
        assert len(rows) == 2
        assert all(row.split(",")[2] == "0.80000000000000004" for row in rows)

    def test_threshold_writes_json(self, run_file, tmp_path, app_config_path, monkeypatch):
        def fake_crossing(curves, config, **kwargs):
            return experiment.ThresholdResult(0.9, 0.01, [], "stub", lambda_c=None)

        monkeypatch.setattr(experiment, "find_crossing_from_config", fake_crossing)
        assert cli("threshold", "--config", str(run_file), app_config=app_config_path) == EXIT_OK
        report = json.loads((tmp_path / "out" / "threshold.json").read_text())
        assert report["gamma_c"] == 0.9
        assert report["env"]["s"] == 0.5
        assert report["version"] == VERSION

    def test_no_crossing_exit_code(self, run_file, app_config_path, monkeypatch):
        def no_crossing(*args, **kwargs):
            raise NoCrossing("curves never cross")

        monkeypatch.setattr(experiment, "find_crossing_from_config", no_crossing)
        code = cli("threshold", "--config", str(run_file), app_config=app_config_path)
        assert code == EXIT_NO_CROSSING

    def test_config_errors(self, tmp_path, app_config_path):
        missing = tmp_path / "missing.yaml"
        assert cli("sweep", "--config", str(missing), app_config=app_config_path) == EXIT_CONFIG
        bad = tmp_path / "bad.yaml"
        bad.write_text(MINIMAL + "sizes: [2]\nengine: warp\n")
        assert cli("sweep", "--config", str(bad), app_config=app_config_path) == EXIT_CONFIG

    def test_engine_failure_exit_code(self, run_file, app_config_path):
        code = cli("sweep", "--config", str(run_file), "--engine", "binder", app_config=app_config_path)
        assert code == EXIT_OK
        ohmic = run_file.read_text().replace("s: 0.5", "s: 0.0").replace("super_local", "ohmic_longrange")
        run_file.write_text(ohmic)
        code = cli("sweep", "--config", str(run_file), "--engine", "binder", app_config=app_config_path)
        assert code == 3

    def test_kernels(self, tmp_path, app_config_path):
        path = tmp_path / "run.yaml"
        path.write_text(MINIMAL + f"kernel_distances: [3.0, 20.0]\nout_dir: {tmp_path}\n")
        assert cli("kernels", "--config", str(path), app_config=app_config_path) == EXIT_OK
        lines = (tmp_path / "kernels.csv").read_text().splitlines()
        assert lines[1] == "distance,F_quad,F_closed,Phi_quad,Phi_closed,regime"
        assert [line.split(",")[0] for line in lines[2:]] == ["0", "3", "20"]

    @pytest.mark.slow
    def test_validate(self, app_config_path, capsys):
        assert cli("validate", app_config=app_config_path) == EXIT_OK
        assert "FAIL" not in capsys.readouterr().out

    @pytest.mark.slow
    def test_validation_mc_within_three_stderr(self):
        results = {r.name: r for r in experiment.run_validation()}
        mc = results["mc == brute (2, 2)"]
        assert mc.passed
        assert "3 stderr" in mc.detail
