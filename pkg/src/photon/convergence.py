"""Convergence bookkeeping shared by the cavity and memory solvers."""

from __future__ import annotations

import logging
from typing import Any

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Raised when refining a solver's discretization moves its headline result.

    Attributes:
        diagnostics: Coarse and refined values together with the step sizes
            that produced them.
    """

    def __init__(self, message: str, diagnostics: dict[str, Any]) -> None:
        super().__init__(f"{message} (diagnostics: {diagnostics})")
        self.diagnostics = diagnostics


def check_converged(
    quantity: str,
    coarse: float,
    fine: float,
    tolerance: float,
    diagnostics: dict[str, Any],
) -> float:
    """Return the change between two resolutions or raise ``ConvergenceError``."""
    change = abs(fine - coarse)
    report = {**diagnostics, f"{quantity}_coarse": coarse, f"{quantity}_fine": fine}
    if change > tolerance:
        raise ConvergenceError(
            f"{quantity} not converged: refinement changed it by {change:.3g} "
            f"(tolerance {tolerance:.3g})",
            report,
        )
    logger.debug(f"{quantity} converged: change {change:.3g} <= {tolerance:.3g}")
    return change
