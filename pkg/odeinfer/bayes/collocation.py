"""Collocation posterior module.

スプライン係数 β に罰則を事前分布として課した事後分布

    π(θ, σ^2, β | y) ∝ exp[-λ PEN(β, θ)] Π_i N(y_i | β' b(t_i), diag(σ^2)) π(θ) π(σ^2)

からのブロック更新 MCMC. PEN は ∫ ||x̂' - f(x̂, t; θ)||^2 dt の求積値.
"""

import logging
import warnings

import numpy as np

from ..config import ChainConfig
from ..errors import InvalidInputError, MixingWarning
from ..models import OdeSystem
from ..simulate import Dataset
from ..splinefit import PenaltyOperator, Quadrature, SplineBasis, fit_ls
from ..timer import TimerContext
from .adapt import ScaleAdapter, empirical_cholesky
from .mh import MIN_ACCEPTANCE
from .priors import PriorSpec
from .samples import PosteriorSamples

logger = logging.getLogger(__name__)


def _beta_cholesky(
    operator: PenaltyOperator,
    beta: np.ndarray,
    theta: np.ndarray,
    sigma2: np.ndarray,
    lam: float,
) -> np.ndarray:
    """初期点で線形化した β の事後精度行列から提案のコレスキー因子を作る."""
    n, p = operator.n, operator.p
    k = beta.shape[0]
    gram = operator.design.T @ operator.design
    precision = np.zeros((k * p, k * p))
    for c in range(p):
        precision[c * k : (c + 1) * k, c * k : (c + 1) * k] = gram / sigma2[c]
    penalty_rows = operator.jacobian(beta, theta, 1.0)[n * p :]
    penalty_rows = np.nan_to_num(penalty_rows, nan=0.0, posinf=0.0, neginf=0.0)
    precision += 2.0 * lam * penalty_rows.T @ penalty_rows
    cov = np.linalg.inv(precision + 1e-12 * np.eye(k * p))
    return np.linalg.cholesky(0.5 * (cov + cov.T)) * (2.38 / np.sqrt(k * p))


def collocation_posterior(
    dataset: Dataset,
    system: OdeSystem,
    basis: SplineBasis,
    prior: PriorSpec,
    lam: float,
    chain: ChainConfig | None = None,
    quad: Quadrature | None = None,
    update_theta: bool = True,
) -> PosteriorSamples:
    """罰則事前分布によるコロケーション事後分布のサンプリング.

    1反復で β | 残り, θ | 残り (update_theta=True の場合), σ^2 | 残り の順に
    更新する. β は線形化した事後共分散で前処理したランダムウォーク,
    θ はランダムウォーク, σ^2 は逆ガンマからの Gibbs.

    Args:
        dataset: データセット.
        system: ODE 系.
        basis: スプライン基底.
        prior: 事前分布 (x0 の事前分布は使わない).
        lam: 罰則の重み λ (正).
        chain: 連鎖の設定. proposal_scales は θ ブロックの提案幅 (長さ q).
        quad: 罰則の求積.
        update_theta: False の場合は θ を初期値に固定する.

    Returns:
        PosteriorSamples (method="collocation"). x0 は x̂(t1), coefficients は β.

    Raises:
        InvalidInputError: λ が正でない, または次元が一致しない場合.
        ConditioningError: 計画行列がランク落ちしている場合.
    """
    if not np.isfinite(lam) or lam <= 0.0:
        raise InvalidInputError(f"λ は正である必要があります: {lam}")
    chain = chain if chain is not None else ChainConfig()
    prior.check_system(system)
    dataset.check_system(system)
    quad = quad if quad is not None else Quadrature.for_grid(dataset.grid)
    operator = PenaltyOperator(dataset, basis, system, quad)
    beta = np.array(fit_ls(dataset, basis).beta)
    n, p, q, k = dataset.n, dataset.state_dim, system.param_dim, basis.k

    rng = np.random.default_rng(chain.seed)
    theta = np.asarray(
        chain.theta_init
        if chain.theta_init is not None
        else 0.5 * (prior.theta_lower + prior.theta_upper),
        dtype=float,
    )
    if not np.isfinite(prior.log_theta(theta)):
        raise InvalidInputError(f"初期値 theta={theta.tolist()} が事前分布の外です")

    def sum_squares(coef: np.ndarray) -> np.ndarray:
        r = operator.data_residual(coef)
        return np.sum(r * r, axis=0)

    ssr = sum_squares(beta)
    pen = operator.penalty(beta, theta)
    if not np.isfinite(pen):
        raise InvalidInputError(f"初期値 theta={theta.tolist()} で罰則が評価できません")
    if prior.sigma_fixed is not None:
        if np.any(prior.sigma_fixed <= 0.0):
            raise InvalidInputError("固定する σ は正である必要があります")
        sigma2 = prior.sigma_fixed**2
    else:
        sigma2 = np.maximum(ssr / max(n - k, 1), 1e-12)

    beta_chol = _beta_cholesky(operator, beta, theta, sigma2, lam)
    if chain.proposal_scales is not None:
        if len(chain.proposal_scales) != q:
            raise InvalidInputError(
                f"proposal_scales の長さ {len(chain.proposal_scales)} が q={q} と不一致"
            )
        theta_chol = np.diag(chain.proposal_scales)
    else:
        theta_chol = np.diag(0.01 * (prior.theta_upper - prior.theta_lower))
    beta_adapter = ScaleAdapter(chain.adapt_interval)
    theta_adapter = ScaleAdapter(chain.adapt_interval)
    history = np.empty((chain.burnin, q))
    shape_from, reshape_at = chain.burnin // 4, chain.burnin // 2
    first_row = basis.design(dataset.times[:1])[0]

    draws_theta, draws_sigma, draws_x0, draws_beta, draws_states = [], [], [], [], []
    blowups = 0
    with TimerContext("collocation_posterior", logger) as timer:
        for iteration in range(chain.iters):
            counting = iteration >= chain.burnin

            step = beta_chol @ rng.standard_normal(k * p)
            proposal = beta + beta_adapter.multiplier * operator.unvec(step)
            prop_ssr = sum_squares(proposal)
            prop_pen = operator.penalty(proposal, theta)
            accepted = False
            if np.isfinite(prop_pen):
                misfit = 0.5 * np.sum((prop_ssr - ssr) / sigma2)
                log_ratio = -misfit - lam * (prop_pen - pen)
                if np.log(rng.uniform()) < log_ratio:
                    beta, ssr, pen = proposal, prop_ssr, prop_pen
                    accepted = True
            else:
                blowups += 1
            beta_adapter.record(accepted, counting)

            if update_theta:
                prop_theta = theta + theta_adapter.multiplier * (
                    theta_chol @ rng.standard_normal(q)
                )
                accepted = False
                if np.isfinite(prior.log_theta(prop_theta)):
                    prop_pen = operator.penalty(beta, prop_theta)
                    if not np.isfinite(prop_pen):
                        blowups += 1
                    elif np.log(rng.uniform()) < -lam * (prop_pen - pen):
                        theta, pen = prop_theta, prop_pen
                        accepted = True
                theta_adapter.record(accepted, counting)

            sigma2 = prior.sigma2_conditional(rng, ssr, n)

            if iteration < chain.burnin:
                history[iteration] = theta
                reshaping = iteration + 1 == reshape_at and reshape_at > shape_from
                if update_theta and reshaping:
                    learned = empirical_cholesky(history[shape_from:reshape_at])
                    if learned is not None:
                        theta_chol = learned
                        theta_adapter.multiplier = 1.0
            beta_adapter.step(iteration, chain.burnin)
            theta_adapter.step(iteration, chain.burnin)

            if counting and (iteration - chain.burnin) % chain.thin == 0:
                draws_theta.append(theta)
                draws_sigma.append(np.sqrt(sigma2))
                draws_x0.append(first_row @ beta)
                draws_beta.append(beta)
                if chain.keep_states:
                    draws_states.append(operator.design @ beta)

    rates = [beta_adapter.acceptance_rate]
    if update_theta:
        rates.append(theta_adapter.acceptance_rate)
    messages = []
    if min(rates) < MIN_ACCEPTANCE:
        message = f"collocation_posterior の受理率が低すぎます ({min(rates):.4f})"
        warnings.warn(message, MixingWarning, stacklevel=2)
        logger.warning(message)
        messages.append(message)
    if blowups:
        logger.warning(f"罰則が非有限になった提案を {blowups} 回棄却しました")
    logger.info(f"collocation_posterior: acceptance={rates}, draws={len(draws_theta)}")

    return PosteriorSamples(
        method="collocation",
        theta=np.array(draws_theta),
        sigma=np.array(draws_sigma),
        x0=np.array(draws_x0),
        seed=chain.seed,
        runtime=timer.elapsed,
        grid=dataset.grid,
        states=np.array(draws_states) if chain.keep_states else None,
        coefficients=np.array(draws_beta),
        acceptance_rate=float(np.mean(rates)),
        n_rejected_blowups=blowups,
        warnings=tuple(messages),
    )
