"""頻度論的推定量."""

from .nls import TrajectoryMisfit, nls_explicit
from .optimizer import StartOutcome, draw_starts, minimize_multistart
from .pda import iterated_pda
from .profiling import generalized_profiling
from .report import EstimateReport, format_value
from .two_step import GradientMatch, gradient_matching_criterion, two_step

__all__ = [
    "EstimateReport",
    "GradientMatch",
    "StartOutcome",
    "TrajectoryMisfit",
    "draw_starts",
    "format_value",
    "generalized_profiling",
    "gradient_matching_criterion",
    "iterated_pda",
    "minimize_multistart",
    "nls_explicit",
    "two_step",
]
