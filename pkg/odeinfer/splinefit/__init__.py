"""3次 B-スプラインによる曲線の当てはめ."""

from .basis import SplineBasis, eval_basis, eval_basis_deriv
from .fit import (
    PenalizedFit,
    PenaltyOperator,
    SplineFit,
    fit_ls,
    fit_penalized,
    penalty_value,
)
from .gcv import GcvResult, gcv_details, gcv_scan, gcv_score, smoother_df
from .quadrature import Quadrature

__all__ = [
    "GcvResult",
    "PenalizedFit",
    "PenaltyOperator",
    "Quadrature",
    "SplineBasis",
    "SplineFit",
    "eval_basis",
    "eval_basis_deriv",
    "fit_ls",
    "fit_penalized",
    "gcv_details",
    "gcv_scan",
    "gcv_score",
    "penalty_value",
    "smoother_df",
]
