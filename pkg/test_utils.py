"""Tests for utility functions."""

import logging

import pytest

from constants import THREADS_ENV_VAR
from errors import ConfigError, ParseError
from utils import (
    config_section,
    format_real,
    load_app_config,
    parse_yaml,
    resolve_threads,
    setup_logging,
)


class TestParseYaml:
    """Tests for YAML parsing with positioned errors."""

    def test_parse_mapping(self):
        assert parse_yaml("a: 1\nb: [2, 3]\n") == {"a": 1, "b": [2, 3]}

    def test_empty_document(self):
        assert parse_yaml("") is None

    def test_error_has_position(self):
        """Test that syntax errors report line and column."""
        with pytest.raises(ParseError) as info:
            parse_yaml("a: 1\nb: [2, 3\n", "run.yaml")
        assert info.value.line is not None
        assert info.value.column is not None
        assert "run.yaml" in str(info.value)

    def test_parse_error_is_config_error(self):
        with pytest.raises(ConfigError):
            parse_yaml("key: 'unterminated\n")


class TestLoadAppConfig:
    """Tests for application config loading."""

    def test_shipped_config(self):
        config = load_app_config()
        assert config["monte_carlo"]["n_bins"] == 32
        assert config["engines"]["binder"]["max_width"] == 13

    def test_missing_file_gives_defaults(self, tmp_path):
        assert load_app_config(tmp_path / "absent.yaml") == {}

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_app_config(path) == {}

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_app_config(path)


class TestConfigSection:
    """Tests for nested section lookup."""

    def test_nested(self):
        config = {"engines": {"binder": {"max_width": 9}}}
        assert config_section(config, "engines", "binder") == {"max_width": 9}

    def test_missing_or_scalar(self):
        assert config_section({}, "engines", "binder") == {}
        assert config_section({"engines": 5}, "engines") == {}
        assert config_section({"engines": None}, "engines", "binder") == {}


class TestResolveThreads:
    """Tests for worker-count resolution."""

    def test_cli_value_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "8")
        assert resolve_threads(2, {"execution": {"threads": 4}}) == 2

    def test_environment_variable(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "8")
        assert resolve_threads(None, {"execution": {"threads": 4}}) == 8

    def test_config_fallback(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert resolve_threads(None, {"execution": {"threads": 4}}) == 4
        assert resolve_threads(None) == 1

    def test_invalid_environment_value(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        with pytest.raises(ConfigError, match="Must be an integer"):
            resolve_threads(None)

    def test_non_positive(self):
        with pytest.raises(ConfigError, match=">= 1"):
            resolve_threads(0)


class TestFormatReal:
    """Tests for CSV float formatting."""

    def test_round_trip_precision(self):
        assert format_real(0.1) == "0.10000000000000001"
        assert float(format_real(1 / 3)) == 1 / 3

    def test_integers_stay_short(self):
        assert format_real(2.0) == "2"

    def test_none(self):
        assert format_real(None) == ""


def test_setup_logging_writes_file(tmp_path):
    """Test that the log file receives records."""
    log_file = tmp_path / "tst.log"
    setup_logging("INFO", str(log_file))
    logging.getLogger("tst.test").info("hello")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "hello" in log_file.read_text()
    setup_logging("WARNING")
