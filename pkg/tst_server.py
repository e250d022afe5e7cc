"""
Surface-Code Threshold MCP Server

An MCP server that:
1. Evaluates the bath kernels F and Phi
2. Computes logical fidelities of surface-code patches under the bath
3. Reports analytic critical couplings for the three bath regimes

Usage:
    python tst_server.py         # stdio mode (local)
    python tst_server.py --sse   # SSE mode (remote)

Environment variables can be set via:
    - .env file (TST_THREADS, TST_CONFIG, MCP_TRANSPORT, MCP_HOST, MCP_PORT)
"""

import logging
import os

# Disable FastMCP banner and logging to prevent stdout pollution
os.environ["FASTMCP_SHOW_CLI_BANNER"] = "false"
os.environ["FASTMCP_LOG_ENABLED"] = "false"

from dotenv import load_dotenv
from fastmcp import FastMCP

from constants import VERSION
from tools import FidelityTool, KernelTool, ThresholdTool
from utils import config_section, load_app_config, setup_logging

# Load environment variables from .env file
load_dotenv()

config = load_app_config(os.getenv("TST_CONFIG"))
log_settings = config_section(config, "logging")
setup_logging(log_settings.get("level", "INFO"), log_settings.get("file"))
logger = logging.getLogger(__name__)

# Initialize MCP server
mcp = FastMCP("Surface-Code Threshold")

# Initialize tool classes
kernel_tool = KernelTool(config)
fidelity_tool = FidelityTool(config)
threshold_tool = ThresholdTool(config)


# ==============================================================================
# MCP Tool Registrations
# ==============================================================================


@mcp.tool()
def evaluate_kernels(
    s: float,
    beta: float,
    delta: float,
    v: float = 1.0,
    distances: list[float] | None = None,
    cutoff: float | None = None,
    omega0: float | None = None,
) -> str:
    """
    Evaluates the bath kernels F(Delta; r; beta) and Phi(Delta; r).

    Args:
        s: Spectral exponent (0.5 super-Ohmic, 0 Ohmic, -0.5 sub-Ohmic)
        beta: Inverse bath temperature (0 = vacuum)
        delta: Time between syndrome extractions
        v: Bath propagation speed (default: 1)
        distances: Qubit separations r; r = 0 is always included
        cutoff: UV cutoff (default: none)
        omega0: Characteristic frequency (default: 1)

    Returns:
        Quadrature and closed-form values per separation with the regime tag
    """
    return kernel_tool.evaluate_kernels(
        s=s, beta=beta, delta=delta, v=v, distances=distances, cutoff=cutoff, omega0=omega0
    )


@mcp.tool()
def reduce_couplings(
    s: float,
    beta: float,
    delta: float,
    lambda_coupling: float,
    variant: str,
    v: float = 1.0,
    eta: float | None = None,
) -> str:
    """
    Reduces a bath and a physical coupling lambda to effective-model couplings.

    Args:
        s: Spectral exponent
        beta: Inverse bath temperature
        delta: Time between syndrome extractions
        lambda_coupling: Qubit-bath coupling lambda
        variant: super_local, super_imag, general_kernel or ohmic_longrange
        v: Bath propagation speed (default: 1)
        eta: Override for the super_imag nearest-neighbour coupling

    Returns:
        The reduced coupling gamma and the model couplings
    """
    return kernel_tool.reduce_couplings(
        s=s,
        beta=beta,
        delta=delta,
        lambda_coupling=lambda_coupling,
        variant=variant,
        v=v,
        eta=eta,
    )


@mcp.tool()
def compute_fidelity(
    nx: int,
    ny: int,
    gamma: float,
    variant: str = "super_local",
    engine: str = "auto",
    eta: float | None = None,
    s: float | None = None,
    beta: float | None = None,
    delta: float | None = None,
    v: float | None = None,
    seed: int | None = None,
    n_sweeps: int | None = None,
) -> str:
    """
    Computes the logical fidelity of an nx x ny patch after one cycle.

    Small lattices are enumerated exactly, narrow strips with complex
    couplings use the row transfer, and real couplings fall back to Monte Carlo.

    Args:
        nx: Plaquette columns
        ny: Plaquette rows
        gamma: Reduced coupling lambda^2 F(Delta; 0; beta)
        variant: super_local, super_imag, general_kernel or ohmic_longrange
        engine: auto, brute, binder or mc (default: auto)
        eta: Nearest-neighbour coupling for super_imag
        s: Spectral exponent (default: the variant's own)
        beta: Inverse bath temperature (default: 0.1)
        delta: Time between syndrome extractions (default: 10)
        v: Bath propagation speed (default: 1)
        seed: Monte Carlo root seed
        n_sweeps: Monte Carlo sweeps, burn-in included

    Returns:
        Fidelity with its standard error and the engine used
    """
    return fidelity_tool.compute_fidelity(
        nx=nx,
        ny=ny,
        gamma=gamma,
        variant=variant,
        engine=engine,
        eta=eta,
        s=s,
        beta=beta,
        delta=delta,
        v=v,
        seed=seed,
        n_sweeps=n_sweeps,
    )


@mcp.tool()
def single_qubit_fidelity(
    lambda_coupling: float, s: float, beta: float, delta: float, v: float = 1.0
) -> str:
    """
    Fidelity of one unprotected qubit coupled to the bath for one cycle.

    Args:
        lambda_coupling: Qubit-bath coupling lambda
        s: Spectral exponent
        beta: Inverse bath temperature
        delta: Time between syndrome extractions
        v: Bath propagation speed (default: 1)

    Returns:
        The single-qubit fidelity
    """
    return fidelity_tool.single_qubit_fidelity(
        lambda_coupling=lambda_coupling, s=s, beta=beta, delta=delta, v=v
    )


@mcp.tool()
def critical_coupling(
    s: float,
    beta: float,
    delta: float,
    v: float = 1.0,
    omega0: float | None = None,
    f_bar_ratio: float | None = None,
) -> str:
    """
    Analytic critical coupling lambda_c of the surface code under the bath.

    Args:
        s: Spectral exponent (0.5, 0 or -0.5)
        beta: Inverse bath temperature
        delta: Time between syndrome extractions
        v: Bath propagation speed (default: 1)
        omega0: Characteristic frequency (default: 1)
        f_bar_ratio: F_bar / Delta F for the Ohmic bath (default: from config.yaml)

    Returns:
        lambda_c, gamma_c, the kernel used and the parametric scaling
    """
    return threshold_tool.critical_coupling(
        s=s, beta=beta, delta=delta, v=v, omega0=omega0, f_bar_ratio=f_bar_ratio
    )


@mcp.resource("tst://presets")
def get_presets_resource() -> str:
    """
    Shipped run presets as a readable resource.

    Access via: tst://presets
    """
    return threshold_tool.describe_presets()


if __name__ == "__main__":
    import sys

    transport = os.getenv("MCP_TRANSPORT", "stdio")
    host = os.getenv("MCP_HOST", "0.0.0.0")
    port = int(os.getenv("MCP_PORT", "8080"))

    logger.info(f"Starting Surface-Code Threshold MCP Server {VERSION}")

    if transport == "sse" or "--sse" in sys.argv:
        logger.info(f"Running in SSE mode on http://{host}:{port}")
        mcp.run(transport="sse", host=host, port=port)
    else:
        logger.info("Running in stdio mode")
        mcp.run()
