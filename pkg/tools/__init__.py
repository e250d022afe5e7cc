"""MCP tools for the surface-code threshold simulator.

Each tool class wraps one area of the library (kernels, fidelities,
thresholds) and returns text suited to an MCP client.
"""

from .fidelity_tool import FidelityTool
from .kernel_tool import KernelTool
from .threshold_tool import ThresholdTool

__all__ = [
    "FidelityTool",
    "KernelTool",
    "ThresholdTool",
]
