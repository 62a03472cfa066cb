"""Host resource detection for run manifests and worker counts."""

import logging
import os
import platform

logger = logging.getLogger(__name__)


def get_available_memory() -> float:
    """Get available system RAM in GB, 0.0 when it cannot be read."""
    ram_gb = 0.0
    try:
        with open("/proc/meminfo") as f:
            for line in f:
                if line.startswith("MemAvailable:"):
                    # MemAvailable is in kB
                    ram_kb = int(line.split()[1])
                    ram_gb = ram_kb / (1024 * 1024)
                    break
        logger.debug(f"Detected {ram_gb:.1f}GB available system RAM")
    except (OSError, ValueError, IndexError) as e:
        logger.debug(f"Could not detect system RAM: {e}")
    return ram_gb


def recommend_threads(requested: int | None = None) -> int:
    """Number of worker threads for independent simulation runs.

    Args:
        requested: Explicit request from the command line, if any.

    Returns:
        ``requested`` when given, otherwise the CPU count capped at 8.
    """
    if requested is not None:
        if requested < 1:
            raise ValueError(f"threads must be at least 1, got {requested}")
        return requested
    return max(1, min(os.cpu_count() or 1, 8))


def host_summary() -> dict[str, str | int | float]:
    """Interpreter and machine facts recorded alongside every run."""
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "cpu_count": os.cpu_count() or 1,
        "ram_available_gb": round(get_available_memory(), 1),
    }
