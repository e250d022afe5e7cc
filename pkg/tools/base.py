"""Base class for MCP tools."""

import logging
from typing import Any

from pydantic import ValidationError

from errors import TstError
from experiment import ExperimentRunner, parse_config
from kernels import KernelEvaluator
from models import EnvironmentSpec
from utils import resolve_threads


class BaseTool:
    """Base class for all MCP tools with shared configuration."""

    def __init__(self, config: dict[str, Any]):
        """
        Initialize the base tool.

        Args:
            config: Configuration dictionary from config.yaml
        """
        self.config = config
        self.logger = logging.getLogger(self.__class__.__name__)

        # Lazy-loaded components
        self._evaluator: KernelEvaluator | None = None

    def get_evaluator(self) -> KernelEvaluator:
        """Get or create the kernel evaluator configured from config."""
        if self._evaluator is None:
            self._evaluator = KernelEvaluator.from_config(self.config)
        return self._evaluator

    def make_env(self, **params: Any) -> EnvironmentSpec:
        """Validated environment, dropping parameters left at None."""
        return EnvironmentSpec(**{k: v for k, v in params.items() if v is not None})

    def make_runner(self, run: dict[str, Any]) -> ExperimentRunner:
        """Runner for an in-memory run config layered like a YAML file."""
        overrides = {k: v for k, v in run.items() if v is not None}
        return ExperimentRunner(
            parse_config(source="<mcp>", overrides=overrides, app_config=self.config),
            self.config,
            threads=resolve_threads(None, self.config),
        )

    def error(self, action: str, e: Exception) -> str:
        """Render a failure the way every tool reports it."""
        if isinstance(e, ValidationError):
            details = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            return f"[ERROR] Invalid input: {details}"
        if isinstance(e, TstError):
            return f"[ERROR] {action} failed ({type(e).__name__}): {e}"
        self.logger.exception(f"Unexpected error while {action.lower()}")
        return f"[ERROR] {action} failed: {e}"
