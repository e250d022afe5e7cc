"""Exception hierarchy for the threshold simulator.

Errors subclass ValueError where the caller passed something unusable and
RuntimeError where a computation could not complete, so generic handlers
keep working.
"""


class TstError(Exception):
    """Root of every error raised by this package."""


# =============================================================================
# Configuration
# =============================================================================


class ConfigError(TstError, ValueError):
    """A run configuration could not be used."""


class ParseError(ConfigError):
    """A configuration document is not well formed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")


# =============================================================================
# Kernels
# =============================================================================


class KernelError(TstError):
    """Base class for kernel evaluation failures."""


class NonConvergence(KernelError, RuntimeError):
    """Adaptive quadrature missed its tolerance within the evaluation budget."""


class InvalidParam(KernelError, ValueError):
    """Parameters for which the requested quantity is undefined or divergent."""


class OutOfRegime(KernelError, ValueError):
    """A closed form was requested outside its validity regime."""


class Unsupported(KernelError, ValueError):
    """No closed form exists for the requested exponent or row."""


class VariantMismatch(KernelError, ValueError):
    """The model variant does not fit the bath exponent."""


# =============================================================================
# Lattice and model
# =============================================================================


class InvalidSize(TstError, ValueError):
    """Lattice dimensions must be positive."""


class MissingKernelEntry(TstError, KeyError):
    """A kernel table lacks a distance needed by the lattice."""


class CacheMismatch(TstError, RuntimeError):
    """Cached magnetizations disagree with the spin configuration."""


class UnknownVariable(TstError, KeyError):
    """A flip request names no variable of the lattice."""


# =============================================================================
# Engines
# =============================================================================


class EngineError(TstError, RuntimeError):
    """Base class for engine failures."""


class TooLarge(EngineError):
    """Enumeration would exceed the brute-force budget."""


class WidthTooLarge(EngineError):
    """The Binder row table would exceed the width budget."""


class ComplexCouplingRejected(EngineError):
    """Monte Carlo cannot sample complex weights; use the Binder engine."""


# =============================================================================
# Analysis
# =============================================================================


class AnalysisError(TstError, ValueError):
    """Base class for threshold extraction failures."""


class NoCrossing(AnalysisError):
    """No pair of fidelity curves changes order over the grid."""


# =============================================================================
# Warnings
# =============================================================================


class NonErgodicWarning(UserWarning):
    """Bin means scatter far beyond their spread."""


class AmbiguousCrossing(UserWarning):
    """A pair of curves crosses more than once beyond noise."""
