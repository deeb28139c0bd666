"""Bayesian two-step module.

1段目で B-スプライン回帰の共役事後分布 (無情報事前分布) から曲線を引き,
2段目で各曲線を θ に写す.

* gradient_match: θ* = argmin ∫ ||x'(t) - f(x, t; θ)||^2 w(t) dt.
* rk_match: θ* = argmin ∫ ||x(t) - x*_θ(t)||^2 dt. x*_θ は x(t1) から RK4 で解いた軌道.

返すサンプルは θ* の集まり. 2段目が失敗した曲線は除外して数を報告する.
"""

import logging
from collections.abc import Callable
from typing import Literal

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import invgamma

from ..config import ChainConfig, OptimizerConfig
from ..errors import ConditioningError, InvalidInputError, OdeInferError
from ..frequentist.optimizer import minimize_multistart
from ..frequentist.two_step import SINGLE_START, GradientMatch
from ..models import OdeSystem, integrate_states
from ..simulate import Dataset
from ..splinefit import Quadrature, SplineBasis, fit_ls
from ..timer import TimerContext
from .samples import PosteriorSamples

logger = logging.getLogger(__name__)

Variant = Literal["gradient_match", "rk_match"]
WeightFn = Callable[[np.ndarray], np.ndarray]

_BLOWUP_RESIDUAL = 1e8
_FD_STEP = float(np.sqrt(np.finfo(float).eps))


class RungeKuttaMatch:
    """固定した曲線と, その t1 の値から解いた RK4 軌道との重み付き残差.

    Args:
        system: ODE 系.
        x: 観測時刻上の曲線の値 (n, p).
        times: 観測時刻.
        weights: 時刻ごとの求積重み.
        refine: 観測間隔あたりの RK4 ステップ数.
    """

    def __init__(
        self,
        system: OdeSystem,
        x: np.ndarray,
        times: np.ndarray,
        weights: np.ndarray,
        refine: int,
    ) -> None:
        """RungeKuttaMatchを初期化."""
        self.system = system
        self.x = x
        self.times = times
        self.sqrt_weights = np.sqrt(weights)[:, None]
        self.refine = refine

    def _weighted(self, theta: np.ndarray) -> np.ndarray:
        states = integrate_states(
            self.system, self.x[0], self.times, theta, self.refine, strict=False
        )
        return self.sqrt_weights * (self.x - states)

    def residuals(self, theta: np.ndarray) -> np.ndarray:
        """重み付き残差ベクトル. 発散時は大きな定数."""
        r = self._weighted(theta).ravel()
        if not np.all(np.isfinite(r)):
            return np.full(r.size, _BLOWUP_RESIDUAL)
        return r

    def objective(self, theta: np.ndarray) -> float:
        """重み付き二乗和. 範囲外や発散は inf."""
        if not self.system.in_bounds(theta):
            return np.inf
        r = self._weighted(theta)
        value = float(np.sum(r * r))
        return value if np.isfinite(value) else np.inf

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        """前進差分のヤコビアン. 摂動した軌道はまとめて1回で積分する."""
        step = _FD_STEP * np.maximum(1.0, np.abs(theta))
        step = np.where(theta + step > self.system.upper, -step, step)
        batch = np.vstack((theta, theta + np.diag(step)))
        states = integrate_states(
            self.system, self.x[0], self.times, batch, self.refine, strict=False
        )
        # 残差は x - states なので符号を反転
        diff = -(states[1:] - states[0]) * self.sqrt_weights / step[:, None, None]
        jac = diff.reshape(theta.size, -1).T
        return np.nan_to_num(jac, nan=0.0, posinf=0.0, neginf=0.0)


def _weights(weight: WeightFn | None, quad: Quadrature) -> np.ndarray:
    if weight is None:
        return quad.weights
    values = np.asarray(weight(quad.nodes), dtype=float)
    values = np.broadcast_to(values, quad.nodes.shape)
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise InvalidInputError("重み関数 w(t) は 0 以上の有限値である必要があります")
    combined = quad.weights * values
    if not np.any(combined > 0.0):
        raise InvalidInputError("重み関数 w(t) が恒等的に 0 です")
    return combined


def two_step_bayes(
    dataset: Dataset,
    system: OdeSystem,
    basis: SplineBasis,
    chain: ChainConfig | None = None,
    variant: Variant = "gradient_match",
    weight: WeightFn | None = None,
    refine: int = 1,
    quad: Quadrature | None = None,
    cfg: OptimizerConfig | None = None,
) -> PosteriorSamples:
    """二段階ベイズ法.

    曲線は σ_c^2 ~ InvGamma((n-k)/2, RSS_c/2), β_c | σ_c^2 ~ N(β̂_c, σ_c^2 (B'B)^-1)
    から独立に引く. 曲線の数は (iters - burnin) / thin.

    Args:
        dataset: データセット.
        system: ODE 系.
        basis: スプライン基底.
        chain: サンプル数とシード (iters, burnin, thin, seed) を使う.
        variant: "gradient_match" または "rk_match".
        weight: gradient_match の重み関数 w(t). None の場合は w ≡ 1.
        refine: rk_match の観測間隔あたりの RK4 ステップ数.
        quad: gradient_match の求積. None の場合は観測密度の5倍の Simpson 格子.
        cfg: 2段目の最適化設定. None の場合は1回の Gauss-Newton.

    Returns:
        PosteriorSamples (method="two_step_bayes"). coefficients は引いた β.

    Raises:
        InvalidInputError: 重み関数が不正, または次元が一致しない場合.
        ConditioningError: 計画行列がランク落ち, または n <= k の場合.
    """
    chain = chain if chain is not None else ChainConfig()
    cfg = cfg if cfg is not None else SINGLE_START
    if variant not in ("gradient_match", "rk_match"):
        raise InvalidInputError(f"未知の variant: {variant}")
    dataset.check_system(system)
    quad = quad if quad is not None else Quadrature.for_grid(dataset.grid)
    match_weights = (
        _weights(weight, quad)
        if variant == "gradient_match"
        else Quadrature.on_points(dataset.grid).weights
    )

    n, k, p = dataset.n, basis.k, dataset.state_dim
    if n <= k:
        raise ConditioningError(k, n)
    ls = fit_ls(dataset, basis)
    design = basis.design(dataset.times)
    residual = dataset.observations - design @ ls.beta
    rss = np.sum(residual * residual, axis=0)
    upper_factor = np.linalg.qr(design, mode="r")
    node_values = basis.design(quad.nodes)
    node_derivs = basis.design(quad.nodes, nu=1)
    times = dataset.times

    # 全ての曲線で共通の開始点: 最小二乗曲線での勾配照合
    anchor = GradientMatch(
        system, ls.values(times), ls.derivative(times), times
    ).solve([system.interior_point()], label="two_step_bayes anchor").x

    count = -(-(chain.iters - chain.burnin) // chain.thin)
    rng = np.random.default_rng(chain.seed)
    thetas, sigmas, x0s, betas = [], [], [], []
    excluded = 0
    with TimerContext(f"two_step_bayes[{variant}]", logger) as timer:
        for draw in range(count):
            sigma2 = invgamma.rvs(
                0.5 * (n - k), scale=np.maximum(0.5 * rss, 1e-300), random_state=rng
            )
            sigma2 = np.where(rss > 0.0, sigma2, 0.0)
            z = rng.standard_normal((k, p))
            beta = ls.beta + solve_triangular(upper_factor, z) * np.sqrt(sigma2)
            if variant == "gradient_match":
                matcher = GradientMatch(
                    system,
                    node_values @ beta,
                    node_derivs @ beta,
                    quad.nodes,
                    match_weights,
                )
                jacobian = None
            else:
                matcher = RungeKuttaMatch(
                    system, design @ beta, times, match_weights, refine
                )
                jacobian = matcher.jacobian
            try:
                best, _ = minimize_multistart(
                    matcher.objective,
                    [anchor],
                    system.lower,
                    system.upper,
                    cfg,
                    residuals=matcher.residuals,
                    jacobian=jacobian,
                    label=f"two_step_bayes draw {draw}",
                )
            except (OdeInferError, ArithmeticError, np.linalg.LinAlgError) as e:
                logger.debug(f"draw {draw} を除外: {e}")
                excluded += 1
                continue
            if not best.success or not system.in_bounds(best.x):
                excluded += 1
                continue
            thetas.append(best.x)
            sigmas.append(np.sqrt(sigma2))
            x0s.append(design[0] @ beta)
            betas.append(beta)

    if excluded:
        logger.warning(f"2段目が失敗した {excluded} 個の曲線を除外しました")
    empty = np.empty((0, p))
    return PosteriorSamples(
        method="two_step_bayes",
        theta=np.array(thetas) if thetas else np.empty((0, system.param_dim)),
        sigma=np.array(sigmas) if sigmas else empty,
        x0=np.array(x0s) if x0s else empty,
        seed=chain.seed,
        runtime=timer.elapsed,
        coefficients=np.array(betas) if betas else None,
        n_excluded=excluded,
    )
