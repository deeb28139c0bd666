"""Spline fitting module.

最小二乗スプライン当てはめと, ODE 罰則付き当てはめ

    Σ_i ||y_i - x(t_i)||^2 + λ ∫ ||x'(t) - f(x, t; θ)||^2 dt

の Gauss-Newton 解法. 係数 β は形 (k, p) で, 全座標で基底を共有する.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from ..errors import ConditioningError, ConvergenceError, InvalidInputError
from ..models import OdeSystem, TimeGrid, Trajectory
from ..simulate import Dataset
from .basis import SplineBasis
from .quadrature import Quadrature

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 100
GRADIENT_TOL = 1e-8
_ARMIJO = 1e-4
_MIN_STEP = 1e-10


@dataclass(frozen=True, eq=False)
class SplineFit:
    """係数 β による曲線 x(t) = β' b(t).

    Args:
        basis: 基底.
        beta: 係数行列 (k, p).
    """

    basis: SplineBasis
    beta: np.ndarray

    def __post_init__(self) -> None:
        """係数を検証して読み取り専用にする."""
        beta = np.array(self.beta, dtype=float)
        if beta.ndim != 2 or beta.shape[0] != self.basis.k:
            raise InvalidInputError(f"係数の形 {beta.shape} が基底数 k={self.basis.k} と不一致")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    def values(self, t: ArrayLike) -> np.ndarray:
        """x̂(t) を (m, p) で返す."""
        return self.basis.design(t) @ self.beta

    def derivative(self, t: ArrayLike) -> np.ndarray:
        """x̂'(t) を (m, p) で返す."""
        return self.basis.design(t, nu=1) @ self.beta

    def trajectory(self, grid: TimeGrid) -> Trajectory:
        """格子上の値を Trajectory として返す."""
        return Trajectory(grid, self.values(grid.points))


@dataclass(frozen=True, eq=False)
class PenalizedFit(SplineFit):
    """罰則付き当てはめの結果.

    Attributes:
        lam: 罰則の重み λ.
        data_misfit: Σ ||y_i - x̂(t_i)||^2.
        penalty: 罰則積分の求積値.
        iterations: Gauss-Newton の反復回数.
        objective_history: 各反復後の目的関数値 (単調非増加).
    """

    lam: float = 0.0
    data_misfit: float = 0.0
    penalty: float = 0.0
    iterations: int = 0
    objective_history: tuple[float, ...] = field(default=())

    @property
    def objective(self) -> float:
        """data_misfit + λ·penalty."""
        return self.data_misfit + self.lam * self.penalty


class PenaltyOperator:
    """データと求積節点上の評価行列を保持し, 残差とヤコビアンを組み立てる.

    残差ベクトルは座標ごとに [データ残差; sqrt(λ w) (x' - f(x))] を並べ,
    係数は vec(β) = (β[:, 0], β[:, 1], ...) の順に並べる.

    Args:
        dataset: データセット.
        basis: 基底.
        system: ODE 系.
        quad: 罰則の求積.
    """

    def __init__(
        self,
        dataset: Dataset,
        basis: SplineBasis,
        system: OdeSystem,
        quad: Quadrature,
    ) -> None:
        """評価行列を前計算する."""
        dataset.check_system(system)
        self.basis = basis
        self.system = system
        self.quad = quad
        self.observations = dataset.observations
        self.design = basis.design(dataset.times)
        self.node_values = basis.design(quad.nodes)
        self.node_derivs = basis.design(quad.nodes, nu=1)
        self.sqrt_weights = np.sqrt(quad.weights)

    @property
    def n(self) -> int:
        """観測数."""
        return int(self.design.shape[0])

    @property
    def p(self) -> int:
        """状態次元."""
        return int(self.observations.shape[1])

    def data_residual(self, beta: np.ndarray) -> np.ndarray:
        """y_i - x̂(t_i) を (n, p) で返す."""
        return self.observations - self.design @ beta

    def collocation_residual(self, beta: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """sqrt(w) (x̂' - f(x̂)) を節点上で (M, p) で返す."""
        x = self.node_values @ beta
        dx = self.node_derivs @ beta
        with np.errstate(all="ignore"):
            drift = self.system.field(x, self.quad.nodes, theta)
            return self.sqrt_weights[:, None] * (dx - drift)

    def penalty(self, beta: np.ndarray, theta: np.ndarray) -> float:
        """罰則積分の求積値 Σ w ||x̂' - f(x̂)||^2."""
        r = self.collocation_residual(beta, theta)
        return float(np.sum(r * r))

    def residual_vector(
        self, beta: np.ndarray, theta: np.ndarray, lam: float
    ) -> np.ndarray:
        """重み付き残差を1本のベクトルにする."""
        parts = [self.data_residual(beta).T.ravel()]
        if lam > 0.0:
            residual = self.collocation_residual(beta, theta)
            parts.append(np.sqrt(lam) * residual.T.ravel())
        return np.concatenate(parts)

    def jacobian(self, beta: np.ndarray, theta: np.ndarray, lam: float) -> np.ndarray:
        """residual_vector の vec(β) に関するヤコビアン."""
        n, k = self.design.shape
        p = self.p
        m = self.node_values.shape[0]
        rows = n * p + (m * p if lam > 0.0 else 0)
        jac = np.zeros((rows, k * p))
        for c in range(p):
            jac[c * n : (c + 1) * n, c * k : (c + 1) * k] = -self.design
        if lam > 0.0:
            x = self.node_values @ beta
            with np.errstate(all="ignore"):
                jf = self.system.state_jacobian(x, self.quad.nodes, theta)
            scale = (np.sqrt(lam) * self.sqrt_weights)[:, None]
            offset = n * p
            for c in range(p):
                for d in range(p):
                    block = -jf[:, c, d][:, None] * self.node_values
                    if c == d:
                        block = block + self.node_derivs
                    jac[offset + c * m : offset + (c + 1) * m, d * k : (d + 1) * k] = (
                        scale * block
                    )
        return jac

    def unvec(self, vector: np.ndarray) -> np.ndarray:
        """vec(β) を (k, p) に戻す."""
        return vector.reshape(self.p, -1).T


def fit_ls(dataset: Dataset, basis: SplineBasis) -> SplineFit:
    """座標ごとの最小二乗でスプラインを当てはめる.

    Args:
        dataset: データセット.
        basis: 基底.

    Returns:
        Σ ||y_i - β' b(t_i)||^2 を最小にする SplineFit.

    Raises:
        ConditioningError: 計画行列が列フルランクでない場合.
        DomainError: 観測時刻が基底の区間外の場合.
    """
    design = basis.design(dataset.times)
    return SplineFit(basis, _least_squares(design, dataset.observations))


def _least_squares(design: np.ndarray, observations: np.ndarray) -> np.ndarray:
    n, k = design.shape
    if n < k:
        raise ConditioningError(k, n)
    beta, _, rank, _ = np.linalg.lstsq(design, observations, rcond=None)
    if rank < k:
        raise ConditioningError(k, n)
    return beta


def _penalized_result(
    operator: PenaltyOperator,
    beta: np.ndarray,
    theta: np.ndarray,
    lam: float,
    iterations: int,
    history: list[float],
) -> PenalizedFit:
    r = operator.data_residual(beta)
    return PenalizedFit(
        basis=operator.basis,
        beta=beta,
        lam=lam,
        data_misfit=float(np.sum(r * r)),
        penalty=operator.penalty(beta, theta),
        iterations=iterations,
        objective_history=tuple(history),
    )


def fit_penalized(
    dataset: Dataset,
    basis: SplineBasis,
    system: OdeSystem,
    theta: ArrayLike,
    lam: float,
    quad: Quadrature | None = None,
    *,
    initial: np.ndarray | None = None,
    operator: PenaltyOperator | None = None,
    max_iter: int = MAX_ITERATIONS,
    tol: float = GRADIENT_TOL,
) -> PenalizedFit:
    """ODE 罰則付きでスプラインを当てはめる.

    バックトラッキング直線探索付き Gauss-Newton 法で解く. 初期値は
    fit_ls の解 (initial 指定時はその係数). 目的関数は反復ごとに単調非増加.
    λ=0 の場合は fit_ls と同じ解を返す.

    Args:
        dataset: データセット.
        basis: 基底.
        system: ODE 系.
        theta: パラメータ (範囲内).
        lam: 罰則の重み (0 以上).
        quad: 罰則の求積. None の場合は観測密度の5倍の Simpson 格子.
        initial: 初期係数 (k, p).
        operator: 前計算済みの PenaltyOperator (繰り返し呼ぶ場合).
        max_iter: 最大反復回数.
        tol: 相対勾配ノルムの収束判定値.

    Returns:
        PenalizedFit.

    Raises:
        InvalidInputError: λ が負の場合.
        BoundsError: θ が範囲外の場合.
        ConditioningError: 計画行列がランク落ちしている場合.
        ConvergenceError: max_iter 回で収束しなかった場合.
    """
    if not np.isfinite(lam) or lam < 0.0:
        raise InvalidInputError(f"λ は 0 以上である必要があります: {lam}")
    theta = system.check_params(theta)
    if operator is None:
        quad = quad if quad is not None else Quadrature.for_grid(dataset.grid)
        operator = PenaltyOperator(dataset, basis, system, quad)

    ls_beta = _least_squares(operator.design, operator.observations)
    if lam == 0.0:
        r = operator.data_residual(ls_beta)
        history = [float(np.sum(r * r))]
        return _penalized_result(operator, ls_beta, theta, lam, 0, history)

    beta = np.array(initial if initial is not None else ls_beta, dtype=float)
    r = operator.residual_vector(beta, theta, lam)
    objective = float(r @ r)
    if not np.isfinite(objective):
        beta = ls_beta.copy()
        r = operator.residual_vector(beta, theta, lam)
        objective = float(r @ r)
    history = [objective]
    grad_norm = np.inf

    for iteration in range(1, max_iter + 1):
        jac = operator.jacobian(beta, theta, lam)
        grad = 2.0 * (jac.T @ r)
        grad_norm = float(np.linalg.norm(grad))
        if not np.isfinite(grad_norm):
            break
        if grad_norm <= tol * (1.0 + objective):
            return _penalized_result(operator, beta, theta, lam, iteration - 1, history)

        direction = np.linalg.lstsq(jac, -r, rcond=None)[0]
        slope = float(grad @ direction)
        step = 1.0
        while step >= _MIN_STEP:
            candidate = beta + step * operator.unvec(direction)
            r_new = operator.residual_vector(candidate, theta, lam)
            value = float(r_new @ r_new)
            if np.isfinite(value) and value <= objective + _ARMIJO * step * slope:
                break
            step *= 0.5
        else:
            # 下降方向が見つからない: 丸め誤差の範囲で停留点
            if grad_norm <= 1e-4 * (1.0 + objective):
                return _penalized_result(
                    operator, beta, theta, lam, iteration - 1, history
                )
            break

        decrease = objective - value
        beta, r, objective = candidate, r_new, value
        history.append(objective)
        logger.debug(f"GN {iteration}: objective={objective:.10g}, step={step:.3g}")
        if decrease <= 1e-15 * (1.0 + objective):
            return _penalized_result(operator, beta, theta, lam, iteration, history)

    raise ConvergenceError(
        f"罰則付き当てはめが {max_iter} 回で収束しませんでした (λ={lam:g})", beta, grad_norm
    )


def penalty_value(
    fit: SplineFit,
    system: OdeSystem,
    theta: ArrayLike,
    quad: Quadrature,
) -> float:
    """曲線 fit の罰則積分 ∫ ||x̂' - f(x̂, t; θ)||^2 dt の求積値."""
    theta = system.check_params(theta)
    x = fit.values(quad.nodes)
    dx = fit.derivative(quad.nodes)
    with np.errstate(all="ignore"):
        residual = dx - system.field(x, quad.nodes, theta)
    return float(quad.integrate(np.sum(residual * residual, axis=1)))
