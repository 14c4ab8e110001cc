from pathlib import Path

ROOT_PATH = Path(__file__).parent.parent.parent

# Data files
# ----------------------------------------------------------------------------------------------------------------------

DATA_PATH = ROOT_PATH / "data"
CONFIGS_PATH = DATA_PATH / "configs"

# Drift certification
# ----------------------------------------------------------------------------------------------------------------------

SAFETY_FACTOR = 1.1
CERTIFICATION_PAIRS = 100_000
CERTIFICATION_RADII = 64
MIN_RATE_FRACTION = 0.5
SUP_NORM_INFLATION = 1.05
RADIAL_GRID_SIZE = 100_001

# Weight function
# ----------------------------------------------------------------------------------------------------------------------

SEAM_SNAP_TOL = 1e-12
QUADRATURE_TOL = 1e-8
GAUSSIAN_TAIL_Z = 12.0

# Simulation
# ----------------------------------------------------------------------------------------------------------------------

DIVERGENCE_THRESHOLD = 1e12
NOISE_BLOCK_STEPS = 256
BINARY_MAGIC = b"WCLB"
BINARY_VERSION = 1
DIRAC_FALLBACK_VARIANCE = 1e-4

# Verification
# ----------------------------------------------------------------------------------------------------------------------

SE_MULTIPLIER = 3.0
DEFAULT_SAMPLES_PER_PAIR = 100_000
FD_STEP_SCALE = 1e-4
GRAD_COMMUTE_RTOL = 1e-4

# Transport
# ----------------------------------------------------------------------------------------------------------------------

MAX_ASSIGNMENT_SIZE = 4096
MAX_BRUTE_FORCE_SIZE = 8

# Runtime
# ----------------------------------------------------------------------------------------------------------------------

THREADS_ENV_VAR = "WCLB_THREADS"
