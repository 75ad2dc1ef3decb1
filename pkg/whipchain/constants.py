from enum import Enum, IntEnum

# Arrays are 0-based; documentation and exported tables are 1-based.
# Array entry k holds link (or grid-free index) k + INDEX_OFFSET.
INDEX_OFFSET = 1

NEGATIVE_TENSION_THRESHOLD = -1e-12
SINGULAR_PIVOT_THRESHOLD = 1e-14
DEGENERATE_PLANE_THRESHOLD = 1e-14
ROUNDING_ERROR_FLOOR = 1e-13  # refinement errors below this are treated as exact

DEFAULT_SEED = 20090101
RANDOM_ANGLE_MARGIN = 0.01  # θ differences drawn from [-π/2 + margin, π/2 - margin]

THREADS_ENV_VAR = "WHIPCHAIN_THREADS"
MANIFEST_FILENAME = "manifest.json"


class ExitCode(IntEnum):
    OK = 0
    VALIDATION_ERROR = 1
    NUMERICAL_FAILURE = 2
    ACCEPTANCE_FAILURE = 3


class OutputFormat(Enum):
    CSV = "csv"
    CSV_SVG = "csv+svg"


class NeumannScheme(Enum):
    """ How the fixed-end condition σ_s(0) = value is written into the continuum operator """
    ONE_SIDED = "one-sided"  # (-3u0 + 4u1 - u2) / 2h, reaches across a source at s = h
    GHOST_POINT = "ghost-point"  # half-cell balance, keeps the operator symmetric


class ProfileType(Enum):
    STRAIGHT = "straight"
    SINE = "sine"
    CUSTOM = "custom"


class StudyReference(Enum):
    FINEST = "finest"
    CONTINUUM = "continuum"
