import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

# Load environment variables with error handling
try:
    load_dotenv(override=True)
except Exception as e:
    print(f"Warning: Could not load .env file: {e}", file=sys.stderr)
    print("Continuing with system environment variables...", file=sys.stderr)

# Application settings
APP_NAME = "bspline"
APP_DESCRIPTION = "B-spline curves, subdivision, least-squares fitting and cross-section lofting"

# Spline defaults
DEFAULT_DEGREE = 3
DEFAULT_NUM_CONTROL = 16
DEFAULT_DEGREE_V = 3
DEFAULT_SAMPLE_COUNT = 100
DEFAULT_RES_U = 64
DEFAULT_RES_V = 64

# Numerical tolerances
RANK_TOLERANCE = 1e-10
HULL_TOLERANCE = 1e-9
INTERPOLATION_TOLERANCE = 1e-9
LIMIT_CURVE_SAMPLES = 10000

# Clustering settings
DEFAULT_SEED = 0
DEFAULT_K = 4
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-9
KMEANS_N_INIT = 4
DEFAULT_FEATURES = ("cx", "cy", "hu2")
HU_LOG_EPSILON = 1e-30

# Pipeline settings
DEFAULT_SLICE_SPACING = 1.0
DEFAULT_LOG_LEVEL = "INFO"


_LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


def _parse_threads(value: Optional[str]) -> Optional[int]:
    if value is None or value.strip() == "":
        return None
    threads = int(value)
    if threads < 1:
        raise ValueError(f"BSPLINE_THREADS must be a positive integer, got {value!r}")
    return threads


def _parse_spacing(value: Optional[str]) -> Optional[float]:
    if value is None or value.strip() == "":
        return None
    spacing = float(value)
    if not spacing > 0 or spacing == float("inf"):
        raise ValueError(f"BSPLINE_SLICE_SPACING must be a positive number, got {value!r}")
    return spacing


def validate_environment() -> bool:
    """Validate that every configured environment variable parses."""
    problems: List[str] = []

    try:
        _parse_threads(os.getenv("BSPLINE_THREADS"))
    except ValueError as e:
        problems.append(f"BSPLINE_THREADS: {e}")

    try:
        _parse_spacing(os.getenv("BSPLINE_SLICE_SPACING"))
    except ValueError as e:
        problems.append(f"BSPLINE_SLICE_SPACING: {e}")

    level = os.getenv("BSPLINE_LOG_LEVEL")
    if level and level.strip().upper() not in _LOG_LEVELS:
        problems.append(f"BSPLINE_LOG_LEVEL: unknown level {level!r}")

    if problems:
        print("⚠️  Invalid environment variables:", file=sys.stderr)
        for problem in problems:
            print(f"   - {problem}", file=sys.stderr)
        print("\nFix these in your .env file or system environment.", file=sys.stderr)

    return len(problems) == 0


def get_thread_count() -> int:
    """Worker threads for parallel stages: BSPLINE_THREADS, else the CPU count."""
    try:
        threads = _parse_threads(os.getenv("BSPLINE_THREADS"))
    except ValueError:
        threads = None
    if threads is None:
        threads = os.cpu_count() or 1
    return threads


def get_slice_spacing() -> float:
    """Distance along z between consecutive slice indices."""
    try:
        spacing = _parse_spacing(os.getenv("BSPLINE_SLICE_SPACING"))
    except ValueError:
        spacing = None
    return DEFAULT_SLICE_SPACING if spacing is None else spacing


def get_log_level() -> str:
    level = (os.getenv("BSPLINE_LOG_LEVEL") or DEFAULT_LOG_LEVEL).strip().upper()
    return level if level in _LOG_LEVELS else DEFAULT_LOG_LEVEL
