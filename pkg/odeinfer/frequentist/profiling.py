"""Generalized profiling module.

3層の入れ子で推定する.

* 外側: λ を格子から GCV 規準で選ぶ.
* 中間: θ(λ) がデータ誤差 Σ ||y_i - x̂(t_i)||^2 を最小化する.
* 内側: β(λ, θ) が罰則付き目的関数を最小化する (fit_penalized).
"""

import logging
from collections.abc import Sequence
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from ..config import OptimizerConfig
from ..errors import EstimationFailure, InvalidInputError, OdeInferError
from ..models import OdeSystem
from ..simulate import Dataset
from ..splinefit import (
    GcvResult,
    PenaltyOperator,
    Quadrature,
    SplineBasis,
    fit_penalized,
    gcv_details,
)
from ..timer import TimerContext
from .optimizer import StartOutcome, draw_starts, minimize_multistart, strictly_inside
from .report import EstimateReport
from .two_step import SINGLE_START, two_step

logger = logging.getLogger(__name__)

_FAILED_RESIDUAL = 1e8
# 内側の解の許容誤差に埋もれない差分幅
_DIFF_STEP = 1e-6


class ProfiledMisfit:
    """固定した λ で θ を動かしたときの内側の解のデータ誤差.

    直前の内側の解を次の初期値として使う. reset で初期値を捨てると,
    同じ θ の列に対して同じ結果を返す.
    """

    def __init__(
        self,
        dataset: Dataset,
        basis: SplineBasis,
        system: OdeSystem,
        operator: PenaltyOperator,
        lam: float,
    ) -> None:
        """ProfiledMisfitを初期化."""
        self.dataset = dataset
        self.basis = basis
        self.system = system
        self.operator = operator
        self.lam = lam
        self._beta: np.ndarray | None = None

    def reset(self) -> None:
        """内側の解の初期値を最小二乗解に戻す."""
        self._beta = None

    def _data_residual(self, theta: np.ndarray) -> np.ndarray | None:
        if not self.system.in_bounds(theta):
            return None
        try:
            fit = fit_penalized(
                self.dataset,
                self.basis,
                self.system,
                theta,
                self.lam,
                operator=self.operator,
                initial=self._beta,
            )
        except (OdeInferError, ArithmeticError, np.linalg.LinAlgError):
            return None
        self._beta = fit.beta
        return self.operator.data_residual(fit.beta).ravel()

    def residuals(self, theta: np.ndarray) -> np.ndarray:
        """内側の解のデータ残差. 内側が失敗した場合は大きな定数."""
        r = self._data_residual(theta)
        if r is None:
            return np.full(self.operator.n * self.operator.p, _FAILED_RESIDUAL)
        return r

    def objective(self, theta: np.ndarray) -> float:
        """データ誤差の二乗和. 内側が失敗した場合は inf."""
        r = self._data_residual(theta)
        return np.inf if r is None else float(r @ r)


def generalized_profiling(
    dataset: Dataset,
    system: OdeSystem,
    basis: SplineBasis,
    lambda_grid: Sequence[float],
    cfg: OptimizerConfig | None = None,
    theta0: ArrayLike | None = None,
    quad: Quadrature | None = None,
) -> EstimateReport:
    """一般化プロファイリングによる推定.

    中間層の開始点は2段階法の推定値 (theta0 指定時はそれ) で,
    cfg.multistart_count - 1 個の乱数開始点を加える.

    Args:
        dataset: データセット.
        system: ODE 系.
        basis: スプライン基底.
        lambda_grid: λ の候補 (空でない正の値).
        cfg: 中間層の最適化設定. None の場合は1回の Gauss-Newton.
        theta0: 中間層の最初の開始点.
        quad: 罰則の求積.

    Returns:
        EstimateReport (method="profiling"). lam は選択した λ,
        objective はその λ でのデータ誤差.

    Raises:
        InvalidInputError: lambda_grid が空または正でない値を含む場合.
        EstimationFailure: 全ての λ で失敗した場合.
    """
    grid = [float(v) for v in lambda_grid]
    if not grid or any(not np.isfinite(v) or v <= 0.0 for v in grid):
        raise InvalidInputError(f"lambda_grid は空でない正の値の列: {list(lambda_grid)}")
    dataset.check_system(system)
    cfg = cfg if cfg is not None else SINGLE_START
    quad = quad if quad is not None else Quadrature.for_grid(dataset.grid)
    operator = PenaltyOperator(dataset, basis, system, quad)

    with TimerContext("generalized_profiling", logger) as timer:
        if theta0 is None:
            theta0 = two_step(dataset, system, basis).theta_hat
        starts = draw_starts(
            system.lower, system.upper, cfg.multistart_count, cfg.seed, first=theta0
        )

        results: list[tuple[GcvResult, StartOutcome]] = []
        diagnostics: list[dict[str, Any]] = []
        for lam in grid:
            misfit = ProfiledMisfit(dataset, basis, system, operator, lam)
            try:
                best, _ = minimize_multistart(
                    misfit.objective,
                    starts,
                    system.lower,
                    system.upper,
                    cfg,
                    residuals=misfit.residuals,
                    diff_step=_DIFF_STEP,
                    reset=misfit.reset,
                    label=f"profiling λ={lam:g}",
                )
                fit = fit_penalized(
                    dataset, basis, system, best.x, lam, operator=operator
                )
                gcv = gcv_details(
                    dataset, basis, system, best.x, lam, fit=fit, operator=operator
                )
            except (OdeInferError, ArithmeticError, np.linalg.LinAlgError) as e:
                logger.warning(f"λ={lam:g} で失敗: {e}")
                diagnostics.append({"lambda": lam, "error": str(e)})
                continue
            logger.debug(
                f"λ={lam:g}: theta={best.x.tolist()}, "
                f"GCV={gcv.score:.6g}, df={gcv.df:.3f}"
            )
            diagnostics.append(
                {
                    "lambda": lam,
                    "gcv": gcv.score,
                    "df": gcv.df,
                    "theta": best.x.tolist(),
                }
            )
            results.append((gcv, best))

    if not results:
        raise EstimationFailure("全ての λ で一般化プロファイリングが失敗しました", diagnostics)
    gcv, best = min(results, key=lambda item: item[0].score)
    theta_hat = best.x
    x0_hat = gcv.fit.values(dataset.times[:1])[0]
    inside = strictly_inside(theta_hat, system.lower, system.upper)
    return EstimateReport(
        method="profiling",
        theta_hat=tuple(float(v) for v in theta_hat),
        x0_hat=tuple(float(v) for v in x0_hat),
        objective=gcv.rss,
        runtime=timer.elapsed,
        iterations=best.iterations,
        converged=best.success and inside,
        lam=gcv.lam,
        details={
            "lambda_grid": grid,
            "gcv": [d.get("gcv", np.nan) for d in diagnostics],
            "df": [d.get("df", np.nan) for d in diagnostics],
        },
    )
