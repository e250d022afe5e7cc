"""Utility functions for configuration, logging and output formatting."""

import logging
import os
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

from constants import CSV_FLOAT_FORMAT, THREADS_ENV_VAR
from errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent / "config.yaml"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str | int = "INFO", log_file: str | None = None) -> None:
    """
    Configure root logging for the CLI and the MCP server.

    Args:
        level: Logging level name or number
        log_file: Optional file that receives the same records as stderr
    """
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def parse_yaml(text: str, source: str = "<string>") -> Any:
    """
    Parse a YAML document, turning syntax errors into ParseError.

    Args:
        text: YAML source
        source: Name used in error messages

    Returns:
        The parsed document

    Raises:
        ParseError: With the line and column of the offending token
    """
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        raise ParseError(f"{source}: {e.problem or e}", line, column) from e
    except yaml.YAMLError as e:
        raise ParseError(f"{source}: {e}") from e


def load_app_config(path: str | Path | None = None) -> dict[str, Any]:
    """
    Load the application config (numerical defaults, logging, budgets).

    A missing file yields an empty dict so every consumer falls back to the
    defaults in constants.py.

    Args:
        path: Config file path, defaults to config.yaml beside this module

    Returns:
        Configuration dictionary
    """
    config_path = Path(path) if path else DEFAULT_CONFIG_PATH
    if not config_path.exists():
        logger.warning(f"Config file {config_path} not found, using defaults")
        return {}
    data = parse_yaml(config_path.read_text(), str(config_path))
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path}: top level must be a mapping")
    return data


def config_section(config: dict[str, Any], *keys: str) -> dict[str, Any]:
    """
    Walk nested config sections, returning {} for anything missing.

    Example:
        >>> config_section({"engines": {"binder": {"max_width": 9}}}, "engines", "binder")
        {'max_width': 9}
    """
    section: Any = config
    for key in keys:
        section = section.get(key) if isinstance(section, dict) else None
        if section is None:
            return {}
    return section if isinstance(section, dict) else {}


def resolve_threads(cli_value: int | None, config: dict[str, Any] | None = None) -> int:
    """
    Resolve the worker count: CLI flag, then TST_THREADS, then config.yaml.

    Args:
        cli_value: Value of --threads, if given
        config: Application config

    Returns:
        A positive thread count
    """
    if cli_value is not None:
        threads = cli_value
    else:
        load_dotenv()
        env_value = os.getenv(THREADS_ENV_VAR)
        if env_value:
            try:
                threads = int(env_value)
            except ValueError:
                raise ConfigError(
                    f"Invalid {THREADS_ENV_VAR} '{env_value}'. Must be an integer"
                ) from None
        else:
            threads = config_section(config or {}, "execution").get("threads", 1)
    if threads < 1:
        raise ConfigError(f"Invalid thread count '{threads}'. Must be >= 1")
    return threads


def format_real(value: float | None) -> str:
    """Format a real for CSV output so it round-trips exactly; None -> ''."""
    if value is None:
        return ""
    return format(float(value), CSV_FLOAT_FORMAT)
