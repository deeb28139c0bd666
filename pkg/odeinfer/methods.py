"""Method registry module.

推定手法を名前で呼び出すためのレジストリ.
頻度論的推定量は ESTIMATORS, ベイズサンプラーは SAMPLERS に登録する.
各アダプタは (dataset, system, settings[, prior]) を受け取り,
MethodSettings から基底や連鎖設定を組み立てて本体を呼ぶ.
"""

import logging

import numpy as np

from .bayes import (
    PosteriorSamples,
    PriorSpec,
    collocation_posterior,
    mh_explicit,
    rdem_filter,
    two_step_bayes,
)
from .config import ChainConfig, MethodSettings
from .errors import OdeInferError
from .frequentist import (
    EstimateReport,
    generalized_profiling,
    iterated_pda,
    nls_explicit,
    two_step,
)
from .models import OdeSystem
from .registry import Registry
from .simulate import Dataset
from .splinefit import Quadrature, SplineBasis

logger = logging.getLogger(__name__)

ESTIMATORS = Registry("estimators")
SAMPLERS = Registry("samplers")


def _basis(dataset: Dataset, settings: MethodSettings) -> SplineBasis:
    return SplineBasis.for_grid(dataset.grid, settings.spline.n_interior_knots)


def _quadrature(dataset: Dataset, settings: MethodSettings) -> Quadrature:
    return Quadrature.for_grid(dataset.grid, settings.spline.quad_factor)


def _warm_chain(
    dataset: Dataset, system: OdeSystem, settings: MethodSettings
) -> ChainConfig:
    """theta_init 未指定なら2段階法の推定値を連鎖の開始点にする."""
    chain = settings.chain
    if chain.theta_init is not None:
        return chain
    try:
        basis = _basis(dataset, settings)
        report = two_step(dataset, system, basis, settings.optimizer)
    except OdeInferError as exc:
        logger.warning(f"開始点の2段階推定に失敗 (事前分布の中心から開始): {exc}")
        return chain
    theta = np.asarray(report.theta_hat)
    lower, upper = system.lower, system.upper
    if not np.all((theta > lower) & (theta < upper)):
        return chain
    return chain.model_copy(update={"theta_init": [float(v) for v in theta]})


@ESTIMATORS.register("nls", "nls_explicit")
def run_nls(
    dataset: Dataset, system: OdeSystem, settings: MethodSettings
) -> EstimateReport:
    """陽的積分の非線形最小二乗."""
    return nls_explicit(dataset, system, settings.optimizer, settings.refine)


@ESTIMATORS.register("two_step")
def run_two_step(
    dataset: Dataset, system: OdeSystem, settings: MethodSettings
) -> EstimateReport:
    """スプライン平滑化 + 勾配照合の2段階法."""
    return two_step(dataset, system, _basis(dataset, settings), settings.optimizer)


@ESTIMATORS.register("pda", "iterated_pda")
def run_pda(
    dataset: Dataset, system: OdeSystem, settings: MethodSettings
) -> EstimateReport:
    """反復主微分解析."""
    return iterated_pda(
        dataset,
        system,
        _basis(dataset, settings),
        settings.lam,
        max_rounds=settings.max_rounds,
        tol=settings.round_tolerance,
        quad=_quadrature(dataset, settings),
    )


@ESTIMATORS.register("profiling", "generalized_profiling")
def run_profiling(
    dataset: Dataset, system: OdeSystem, settings: MethodSettings
) -> EstimateReport:
    """GCV で λ を選ぶ一般化プロファイリング."""
    return generalized_profiling(
        dataset,
        system,
        _basis(dataset, settings),
        settings.lambda_grid,
        settings.optimizer,
        quad=_quadrature(dataset, settings),
    )


@SAMPLERS.register("mh", "mh_explicit")
def run_mh(
    dataset: Dataset,
    system: OdeSystem,
    settings: MethodSettings,
    prior: PriorSpec | None = None,
) -> PosteriorSamples:
    """陽的積分尤度のランダムウォーク MH."""
    prior = prior or PriorSpec.default(system, dataset)
    chain = _warm_chain(dataset, system, settings)
    return mh_explicit(dataset, system, prior, chain, settings.refine)


@SAMPLERS.register("collocation", "collocation_posterior")
def run_collocation(
    dataset: Dataset,
    system: OdeSystem,
    settings: MethodSettings,
    prior: PriorSpec | None = None,
) -> PosteriorSamples:
    """PEN(x) 事前分布によるベイズコロケーション."""
    prior = prior or PriorSpec.default(system, dataset)
    chain = _warm_chain(dataset, system, settings)
    return collocation_posterior(
        dataset,
        system,
        _basis(dataset, settings),
        prior,
        settings.lam,
        chain,
        quad=_quadrature(dataset, settings),
    )


@SAMPLERS.register("two_step_bayes")
def run_two_step_bayes(
    dataset: Dataset,
    system: OdeSystem,
    settings: MethodSettings,
    prior: PriorSpec | None = None,
) -> PosteriorSamples:
    """ベイズ2段階法 (prior は使わない)."""
    return two_step_bayes(
        dataset,
        system,
        _basis(dataset, settings),
        settings.chain,
        variant=settings.variant,
        refine=settings.refine,
        quad=_quadrature(dataset, settings),
        cfg=settings.optimizer,
    )


@SAMPLERS.register("rdem", "rdem_filter")
def run_rdem(
    dataset: Dataset,
    system: OdeSystem,
    settings: MethodSettings,
    prior: PriorSpec | None = None,
) -> PosteriorSamples:
    """RDEM 状態空間近似の Liu-West 粒子フィルタ."""
    return rdem_filter(dataset, system, settings.filter, prior)
