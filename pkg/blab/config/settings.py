import os

from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(
            f"Environment variable {name} must be an integer, got '{raw}'."
        ) from None


def _float_list_env(name: str, default: tuple[float, ...]) -> tuple[float, ...]:
    raw = os.getenv(name)
    if not raw:
        return default
    try:
        values = tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise ValueError(
            f"Environment variable {name} must be a comma-separated list of numbers, got '{raw}'."
        ) from None
    if any(v <= 0 for v in values):
        raise ValueError(f"Environment variable {name} must only hold positive values.")
    return values


MAX_DEGREE = _int_env("BLAB_MAX_DEGREE", 256)
GRID_N = _int_env("BLAB_GRID_N", 4096)
VERIFY_ANGULAR = _int_env("BLAB_VERIFY_ANGULAR", 128)
SEED = _int_env("BLAB_SEED", 0)
LOG_LEVEL = os.getenv("BLAB_LOG_LEVEL", "INFO")

# K-side split used by the disc pipeline: extension, dilation, interior fit.
DISC_BUDGET_K = _float_list_env("BLAB_DISC_BUDGET", (1 / 3, 1 / 3, 1 / 3))
# L-side split: extension, interior fit.
DISC_BUDGET_L = (1 / 2, 1 / 2)

if MAX_DEGREE < 1:
    raise ValueError("Environment variable BLAB_MAX_DEGREE must be positive.")
if GRID_N < 8 or GRID_N & (GRID_N - 1):
    raise ValueError("Environment variable BLAB_GRID_N must be a power of two >= 8.")
if len(DISC_BUDGET_K) != 3:
    raise ValueError("Environment variable BLAB_DISC_BUDGET must hold three values.")

# Absolute tolerances shared across modules.
BOUNDARY_TOL = 1e-12
ZERO_FLAG_TOL = 1e-9
