"""Multistart optimizer module.

境界付き最適化を複数の開始点から実行し, 最良の結果を選ぶ.
Nelder-Mead は scipy.optimize.minimize, Gauss-Newton は
scipy.optimize.least_squares (信頼領域法 trf) を使う.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import Bounds, least_squares, minimize

from ..config import OptimizerConfig
from ..errors import EstimationFailure, OdeInferError
from ..models import finite_box

logger = logging.getLogger(__name__)

# 開始点を境界から離す幅 (箱の幅に対する相対値)
_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class StartOutcome:
    """1つの開始点からの最適化結果."""

    index: int
    start: np.ndarray
    x: np.ndarray
    value: float
    iterations: int
    success: bool
    message: str

    def diagnostics(self) -> dict[str, Any]:
        """EstimationFailure 用の診断情報."""
        return {
            "index": self.index,
            "start": self.start.tolist(),
            "value": self.value,
            "success": self.success,
            "message": self.message,
        }


def draw_starts(
    lower: ArrayLike,
    upper: ArrayLike,
    count: int,
    seed: int,
    first: ArrayLike | None = None,
) -> list[np.ndarray]:
    """範囲内の一様乱数で開始点を生成する.

    first を指定した場合は最初の開始点とし, 残りを乱数で補う.
    無限の範囲は finite_box で有限の箱に置き換える.
    """
    lo, hi = finite_box(lower, upper)
    margin = _MARGIN * (hi - lo)
    rng = np.random.default_rng(seed)
    starts = []
    if first is not None:
        starts.append(np.clip(np.asarray(first, dtype=float), lo + margin, hi - margin))
    while len(starts) < count:
        starts.append(np.clip(rng.uniform(lo, hi), lo + margin, hi - margin))
    return starts


def minimize_multistart(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    lower: ArrayLike,
    upper: ArrayLike,
    cfg: OptimizerConfig,
    *,
    residuals: Callable[[np.ndarray], np.ndarray] | None = None,
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
    diff_step: float | None = None,
    reset: Callable[[], None] | None = None,
    label: str = "",
) -> tuple[StartOutcome, list[StartOutcome]]:
    """各開始点から最適化し, 最良の結果と全結果を返す.

    Gauss-Newton は residuals が与えられた場合のみ使う. 最終値は objective で
    再評価し, 同値の場合は開始点の番号が小さい方を選ぶ.
    reset は各開始点の前に呼ぶ (目的関数が内部状態を持つ場合の初期化).

    Raises:
        EstimationFailure: 全ての開始点で目的関数が非有限になった場合.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    use_gn = cfg.algorithm == "gauss-newton" and residuals is not None
    outcomes = []
    for index, start in enumerate(starts):
        if reset is not None:
            reset()
        try:
            if use_gn:
                result = least_squares(
                    residuals,
                    start,
                    jac=jacobian if jacobian is not None else "2-point",
                    bounds=(lower, upper),
                    method="trf",
                    xtol=cfg.tolerance,
                    ftol=cfg.tolerance,
                    gtol=cfg.tolerance,
                    max_nfev=cfg.max_iters,
                    diff_step=diff_step,
                )
                iterations = int(result.nfev)
                success = bool(result.status > 0)
            else:
                result = minimize(
                    objective,
                    start,
                    method="Nelder-Mead",
                    bounds=Bounds(lower, upper),
                    options={
                        "maxiter": cfg.max_iters,
                        "xatol": cfg.tolerance,
                        "fatol": cfg.tolerance,
                        "adaptive": start.size > 2,
                    },
                )
                iterations = int(result.nit)
                success = bool(result.success)
            x = np.asarray(result.x, dtype=float)
            value = float(objective(x))
            message = str(result.message)
        except (OdeInferError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            x, value, iterations, success, message = start, np.inf, 0, False, str(e)
        if not np.isfinite(value):
            value, success = np.inf, False
        outcome = StartOutcome(index, start, x, value, iterations, success, message)
        outcomes.append(outcome)
        logger.debug(
            f"{label} start {index}: value={value:.10g}, success={success}, {message}"
        )

    usable = [o for o in outcomes if np.isfinite(o.value)]
    if not usable:
        raise EstimationFailure(
            f"{label}: 全ての開始点 ({len(outcomes)} 個) で推定に失敗しました",
            [o.diagnostics() for o in outcomes],
        )
    best = min(usable, key=lambda o: (o.value, o.index))
    return best, outcomes


def strictly_inside(theta: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> bool:
    """θ が開区間の箱の内側にあるか."""
    return bool(np.all(theta > lower) and np.all(theta < upper))
