"""Explicit-integration Metropolis-Hastings module.

尤度を数値積分した軌道で正確に評価する事後分布

    π(θ, σ^2, x0 | y) ∝ Π_i N(y_i | x(t_i; θ, x0), diag(σ^2)) π(θ) π(σ^2) π(x0)

からのサンプリング. (θ, x0) はランダムウォーク MH の1ブロック,
σ^2 は逆ガンマの完全条件付き分布からの Gibbs で更新する.
"""

import logging
import warnings

import numpy as np

from ..config import ChainConfig
from ..errors import InvalidInputError, MixingWarning
from ..models import OdeSystem, integrate_states
from ..simulate import Dataset
from ..timer import TimerContext
from .adapt import ScaleAdapter, empirical_cholesky
from .priors import PriorSpec
from .samples import PosteriorSamples

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 0.01


def _initial_scales(prior: PriorSpec, chain: ChainConfig) -> np.ndarray:
    d = prior.param_dim + prior.state_dim
    if chain.proposal_scales is not None:
        if len(chain.proposal_scales) != d:
            raise InvalidInputError(
                f"proposal_scales の長さ {len(chain.proposal_scales)} が q+p={d} と不一致"
            )
        return np.asarray(chain.proposal_scales, dtype=float)
    theta_scale = 0.01 * (prior.theta_upper - prior.theta_lower)
    x0_scale = 0.1 * prior.x0_sd
    return np.concatenate((theta_scale, x0_scale))


def mh_explicit(
    dataset: Dataset | None,
    system: OdeSystem,
    prior: PriorSpec,
    chain: ChainConfig | None = None,
    refine: int = 10,
) -> PosteriorSamples:
    """数値積分の尤度によるランダムウォーク MH.

    burnin 中は adapt_interval ごとに提案幅の倍率を受理率 20-40% を目標に
    調整し, burnin の半分の時点で前半の軌跡の共分散から提案の形を決める.
    burnin 以降の提案は固定. 発散した提案は棄却して数える.

    Args:
        dataset: データセット. None の場合は事前分布からのサンプリング.
        system: ODE 系.
        prior: 事前分布.
        chain: 連鎖の設定.
        refine: 観測間隔あたりの RK4 ステップ数.

    Returns:
        PosteriorSamples (method="mh").

    Raises:
        InvalidInputError: 次元の不一致, または初期値で尤度が評価できない場合.
    """
    chain = chain if chain is not None else ChainConfig()
    prior.check_system(system)
    q, p = prior.param_dim, prior.state_dim
    if dataset is not None:
        dataset.check_system(system)
    if prior.sigma_fixed is not None and np.any(prior.sigma_fixed <= 0.0):
        raise InvalidInputError("MH では固定する σ は正である必要があります")

    rng = np.random.default_rng(chain.seed)
    n = dataset.n if dataset is not None else 0

    def sum_squares(theta: np.ndarray, x0: np.ndarray) -> np.ndarray | None:
        if dataset is None:
            return np.zeros(p)
        states = integrate_states(
            system, x0, dataset.times, theta, refine, strict=False
        )
        r = states - dataset.observations
        ssr = np.sum(r * r, axis=0)
        return ssr if np.all(np.isfinite(ssr)) else None

    theta = np.asarray(
        chain.theta_init
        if chain.theta_init is not None
        else 0.5 * (prior.theta_lower + prior.theta_upper),
        dtype=float,
    )
    x0 = prior.x0_mean.copy()
    ssr = sum_squares(theta, x0)
    if ssr is None or not np.isfinite(prior.log_theta(theta)):
        raise InvalidInputError(f"初期値 theta={theta.tolist()} で尤度が評価できません")
    if prior.sigma_fixed is not None:
        sigma2 = prior.sigma_fixed**2
    elif n > 0:
        sigma2 = np.maximum(ssr / n, 1e-12)
    else:
        sigma2 = prior.sample_sigma2(rng, 1)[0]

    # 点質量の x0 座標は動かさない
    free = np.concatenate((np.ones(q, dtype=bool), prior.x0_sd > 0.0))
    scales = _initial_scales(prior, chain)[free]
    chol = np.diag(scales)
    d = int(free.sum())
    adapter = ScaleAdapter(chain.adapt_interval)
    z = np.concatenate((theta, x0))
    log_x0 = prior.log_x0(x0)
    history = np.empty((chain.burnin, d))
    shape_from = chain.burnin // 4
    reshape_at = chain.burnin // 2

    draws_theta, draws_sigma, draws_x0, draws_states = [], [], [], []
    blowups = 0

    with TimerContext("mh_explicit", logger) as timer:
        for iteration in range(chain.iters):
            counting = iteration >= chain.burnin
            proposal = z.copy()
            proposal[free] += adapter.multiplier * (chol @ rng.standard_normal(d))
            prop_theta, prop_x0 = proposal[:q], proposal[q:]
            accepted = False
            log_prior = prior.log_theta(prop_theta)
            if np.isfinite(log_prior):
                prop_log_x0 = prior.log_x0(prop_x0)
                prop_ssr = None
                if np.isfinite(prop_log_x0):
                    prop_ssr = sum_squares(prop_theta, prop_x0)
                if prop_ssr is None and np.isfinite(prop_log_x0):
                    blowups += 1
                if prop_ssr is not None:
                    misfit = 0.5 * np.sum((prop_ssr - ssr) / sigma2)
                    log_ratio = prop_log_x0 - log_x0 - misfit
                    if np.log(rng.uniform()) < log_ratio:
                        z, ssr, log_x0 = proposal, prop_ssr, prop_log_x0
                        accepted = True
            adapter.record(accepted, counting)

            sigma2 = prior.sigma2_conditional(rng, ssr, n)

            if iteration < chain.burnin:
                history[iteration] = z[free]
                if iteration + 1 == reshape_at and reshape_at > shape_from:
                    learned = empirical_cholesky(history[shape_from:reshape_at])
                    if learned is not None:
                        chol = learned
                        adapter.multiplier = 1.0
            adapter.step(iteration, chain.burnin)

            if counting and (iteration - chain.burnin) % chain.thin == 0:
                draws_theta.append(z[:q])
                draws_x0.append(z[q:])
                draws_sigma.append(np.sqrt(sigma2))
                if chain.keep_states and dataset is not None:
                    draws_states.append(
                        integrate_states(system, z[q:], dataset.times, z[:q], refine)
                    )

    rate = adapter.acceptance_rate
    messages = []
    if rate < MIN_ACCEPTANCE:
        message = f"mh_explicit の受理率が低すぎます ({rate:.4f})"
        warnings.warn(message, MixingWarning, stacklevel=2)
        logger.warning(message)
        messages.append(message)
    if blowups:
        logger.warning(f"数値発散した提案を {blowups} 回棄却しました")
    logger.info(f"mh_explicit: acceptance={rate:.3f}, draws={len(draws_theta)}")

    keep = chain.keep_states and dataset is not None
    return PosteriorSamples(
        method="mh",
        theta=np.array(draws_theta),
        sigma=np.array(draws_sigma),
        x0=np.array(draws_x0),
        seed=chain.seed,
        runtime=timer.elapsed,
        grid=dataset.grid if dataset is not None else None,
        states=np.array(draws_states) if keep else None,
        acceptance_rate=rate,
        n_rejected_blowups=blowups,
        warnings=tuple(messages),
    )
