"""Project-wide constants and magic numbers.

This module centralizes the numerical defaults, budgets and file formats used
across the codebase. Values here are fallbacks: every one of them can be
overridden from config.yaml.
"""

import math

VERSION = "1.0.0"

# =============================================================================
# Bath and Kernels
# =============================================================================

# Spectral exponents with tabulated closed forms
SUPER_OHMIC = 0.5
OHMIC = 0.0
SUB_OHMIC = -0.5
TABULATED_EXPONENTS = (SUPER_OHMIC, OHMIC, SUB_OHMIC)

# Only two-dimensional baths are modelled
BATH_DIMENSION = 2

# Quadrature
DEFAULT_KERNEL_TOL = 1e-8  # absolute
DEFAULT_RELATIVE_FLOOR = 1e-10  # accepted error never below this fraction of |value|
DEFAULT_MAX_PANELS = 200_000  # evaluation budget per integral
ENVELOPE_CUTOFF = 1e-12  # integrate until e^{-cx} drops below this
PANEL_QUAD_LIMIT = 200  # subdivision limit handed to scipy per panel

# Closed-form validity margins
DEFAULT_MAX_BETA_OVER_DELTA = 0.1
DEFAULT_DISTANCE_MARGIN = 10.0

# Distances are rounded to this many decimals (units of a) for kernel tables
DISTANCE_DECIMALS = 9

# =============================================================================
# Statistical Model
# =============================================================================

# Critical fictitious inverse temperature of the local super-Ohmic model
XI_C_SUPER = math.log(1.0 + math.sqrt(2.0))

# Numerical Ohmic threshold and the run it belongs to
GAMMA_C_OHMIC = 0.475
DEFAULT_F_BAR_RATIO = 0.72  # F_bar / Delta F
DEFAULT_PHI_BAR_RATIO = 0.0  # Phi_bar / Delta F

# Nearest-neighbour qubits sit at a / sqrt(2)
NEAREST_NEIGHBOR_DISTANCE = 1.0 / math.sqrt(2.0)  # units of a

# =============================================================================
# Exact Engines
# =============================================================================

BRUTE_FORCE_MAX_VARIABLES = 26
BRUTE_FORCE_CHUNK_BITS = 16  # states per enumeration chunk = 2**bits
AUTO_BRUTE_MAX_VARIABLES = 22
BINDER_MAX_WIDTH = 13

FINITE_DIFF_REL_STEP = 1e-4
FINITE_DIFF_MIN_STEP = 1e-4  # used at xi = 0
RICHARDSON_TRIGGER = 1e-3  # relative disagreement between h and 2h differences

REALNESS_TOL = 1e-10
B_CORR_VALIDITY_TOL = 1e-6

# =============================================================================
# Monte Carlo
# =============================================================================

DEFAULT_N_SWEEPS = 100_000
DEFAULT_BURN_FRACTION = 0.2
DEFAULT_N_BINS = 32
MIN_N_BINS = 10
DEFAULT_MEASURE_STRIDE = 1
DEFAULT_SEED = 20150915
NON_ERGODIC_SIGMAS = 6.0
CACHE_CHECK_INTERVAL = 1000  # sweeps between magnetization recounts (debug)
MC_BLOCK_SWEEPS = 10_000  # sweeps per compiled block

# Trace file record layout
TRACE_DTYPE = [("sweep", "<i8"), ("observable", "i1"), ("energy", "<f8")]

# =============================================================================
# Analysis
# =============================================================================

DEFAULT_BOOTSTRAP_RESAMPLES = 200
DEFAULT_BOOTSTRAP_SEED = 7

# =============================================================================
# Output
# =============================================================================

CSV_FLOAT_FORMAT = ".17g"
CURVES_FILENAME = "curves.csv"
THRESHOLD_FILENAME = "threshold.json"
KERNELS_FILENAME = "kernels.csv"
CURVES_HEADER = ("size_nx", "size_ny", "gamma", "fidelity", "stderr", "engine", "seed")
KERNELS_HEADER = ("distance", "F_quad", "F_closed", "Phi_quad", "Phi_closed", "regime")

# =============================================================================
# CLI
# =============================================================================

THREADS_ENV_VAR = "TST_THREADS"
PRESETS_DIR = "presets"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENGINE = 3
EXIT_NO_CROSSING = 4
