"""Generalized cross-validation module.

罰則付き当てはめの λ を選ぶための GCV 規準

    GCV(λ) = n·RSS / (n - df)^2

df は解における線形化した平滑化行列のトレースを座標数 p で割ったもの.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DegenerateSmootherError
from ..models import OdeSystem
from ..simulate import Dataset
from .basis import SplineBasis
from .fit import PenalizedFit, PenaltyOperator, fit_penalized
from .quadrature import Quadrature


@dataclass(frozen=True, eq=False)
class GcvResult:
    """1つの λ に対する GCV の内訳."""

    lam: float
    score: float
    df: float
    rss: float
    fit: PenalizedFit


def smoother_df(
    operator: PenaltyOperator, fit: PenalizedFit, theta: np.ndarray
) -> float:
    """解で線形化した平滑化行列のトレース / p."""
    jac = operator.jacobian(fit.beta, theta, fit.lam)
    data_rows = jac[: operator.n * operator.p]
    normal = jac.T @ jac
    trace = np.trace(np.linalg.solve(normal, data_rows.T @ data_rows))
    return float(trace) / operator.p


def gcv_details(
    dataset: Dataset,
    basis: SplineBasis,
    system: OdeSystem,
    theta: ArrayLike,
    lam: float,
    quad: Quadrature | None = None,
    *,
    fit: PenalizedFit | None = None,
    operator: PenaltyOperator | None = None,
) -> GcvResult:
    """GCV 規準とその内訳を計算する.

    Raises:
        DegenerateSmootherError: df が n 以上の場合.
    """
    theta = system.check_params(theta)
    if operator is None:
        quad = quad if quad is not None else Quadrature.for_grid(dataset.grid)
        operator = PenaltyOperator(dataset, basis, system, quad)
    if fit is None:
        fit = fit_penalized(dataset, basis, system, theta, lam, operator=operator)
    df = smoother_df(operator, fit, theta)
    n = dataset.n
    if n - df <= 1e-8 * n:
        raise DegenerateSmootherError(df, n)
    score = n * fit.data_misfit / (n - df) ** 2
    return GcvResult(lam=float(lam), score=score, df=df, rss=fit.data_misfit, fit=fit)


def gcv_score(
    dataset: Dataset,
    basis: SplineBasis,
    system: OdeSystem,
    theta: ArrayLike,
    lam: float,
    quad: Quadrature | None = None,
) -> float:
    """GCV = n·RSS / (n - df)^2 を返す.

    Raises:
        DegenerateSmootherError: df が n 以上の場合.
    """
    return gcv_details(dataset, basis, system, theta, lam, quad).score


def gcv_scan(
    dataset: Dataset,
    basis: SplineBasis,
    system: OdeSystem,
    theta: ArrayLike,
    lambda_grid: Sequence[float],
    quad: Quadrature | None = None,
) -> list[GcvResult]:
    """λ の格子上で GCV を評価する (θ 固定)."""
    quad = quad if quad is not None else Quadrature.for_grid(dataset.grid)
    operator = PenaltyOperator(dataset, basis, system, quad)
    return [
        gcv_details(dataset, basis, system, theta, lam, operator=operator)
        for lam in lambda_grid
    ]
