"""RDEM particle filter module.

ODE を RK4 の遷移で近似した状態空間モデル

    y_i = x_i + ε_i,              ε_i ~ N(0, diag(σ^2))
    x_i = g(x_{i-1}, t_{i-1}; θ) + η_i,   η_i ~ N(0, diag(V))

に対する Liu-West 型の粒子フィルタ. 粒子ごとに (θ, σ, V) を持ち,
変換空間 (θ はロジット, σ と V は対数) でカーネル縮小

    m_j = a φ_j + (1 - a) φ̄,   φ_j ← m_j + sqrt(1 - a^2) L z

で動かす (L は重み付き共分散のコレスキー因子). ESS が粒子数の半分を
下回ったら系統的リサンプリングを行う.
"""

import logging

import numpy as np
from scipy.special import logsumexp

from ..config import FilterConfig
from ..errors import DegeneracyError, InvalidInputError
from ..models import OdeSystem, propagate
from ..simulate import Dataset
from ..timer import TimerContext
from .priors import BoxTransform, PriorSpec
from .samples import PosteriorSamples

logger = logging.getLogger(__name__)

MIN_ESS = 5.0
# V の初期値: データ分散に対する比
V_INIT_FRACTION = 1e-2


def systematic_resample(rng: np.random.Generator, weights: np.ndarray) -> np.ndarray:
    """系統的リサンプリングの添字を返す."""
    count = weights.size
    positions = (rng.uniform() + np.arange(count)) / count
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.minimum(np.searchsorted(cumulative, positions, side="right"), count - 1)


def _log_likelihood(y: np.ndarray, x: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """粒子ごとの log N(y | x, diag(σ^2)). σ=0 の座標は一致すれば 0, しなければ -inf."""
    r = y - x
    with np.errstate(all="ignore"):
        terms = -0.5 * (np.log(2.0 * np.pi * sigma2) + r * r / sigma2)
    terms = np.where(sigma2 == 0.0, np.where(r == 0.0, 0.0, -np.inf), terms)
    terms = np.where(np.isfinite(x), terms, -np.inf)
    return np.sum(terms, axis=1)


def _fixed(values: list[float] | None, size: int, label: str) -> np.ndarray | None:
    if values is None:
        return None
    array = np.asarray(values, dtype=float)
    if array.shape != (size,) or not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{label} の長さは {size} である必要があります")
    return array


class _ParameterCloud:
    """粒子ごとの学習対象パラメータと変換空間での表現."""

    def __init__(
        self,
        theta: np.ndarray,
        sigma2: np.ndarray,
        v: np.ndarray,
        transform: BoxTransform,
        learn: tuple[bool, bool, bool],
    ) -> None:
        self.theta = theta
        self.sigma2 = sigma2
        self.v = v
        self.transform = transform
        self.learn_theta, self.learn_sigma, self.learn_v = learn

    @property
    def dim(self) -> int:
        q, p = self.theta.shape[1], self.sigma2.shape[1]
        return q * self.learn_theta + p * (self.learn_sigma + self.learn_v)

    def pack(self) -> np.ndarray:
        parts = []
        if self.learn_theta:
            parts.append(self.transform.forward(self.theta))
        if self.learn_sigma:
            parts.append(np.log(self.sigma2))
        if self.learn_v:
            parts.append(np.log(self.v))
        return np.hstack(parts)

    def unpack(self, phi: np.ndarray) -> None:
        q, p = self.theta.shape[1], self.sigma2.shape[1]
        offset = 0
        if self.learn_theta:
            self.theta = self.transform.inverse(phi[:, :q])
            offset = q
        if self.learn_sigma:
            self.sigma2 = np.exp(phi[:, offset : offset + p])
            offset += p
        if self.learn_v:
            self.v = np.exp(phi[:, offset : offset + p])

    def select(self, index: np.ndarray) -> None:
        self.theta = self.theta[index]
        self.sigma2 = self.sigma2[index]
        self.v = self.v[index]

    def shrink(
        self, rng: np.random.Generator, weights: np.ndarray, discount: float
    ) -> None:
        """Liu-West のカーネル縮小と補完分散のジッター."""
        if self.dim == 0:
            return
        phi = self.pack()
        mean = weights @ phi
        centered = phi - mean
        cov = (centered * weights[:, None]).T @ centered
        cov = 0.5 * (cov + cov.T) + 1e-12 * np.eye(self.dim)
        chol = np.linalg.cholesky(cov)
        noise = rng.standard_normal(phi.shape) @ chol.T
        spread = np.sqrt(1.0 - discount**2) * noise
        self.unpack(discount * phi + (1.0 - discount) * mean + spread)


def rdem_filter(
    dataset: Dataset,
    system: OdeSystem,
    pf: FilterConfig | None = None,
    prior: PriorSpec | None = None,
) -> PosteriorSamples:
    """RDEM 状態空間モデルの粒子フィルタ.

    初期粒子は θ を事前分布 (箱の一様分布), σ^2 を逆ガンマ, V をデータ分散の
    1e-2 倍を中心とする対数正規, x(t1) を x0 の事前分布 (既定の平均は y(t1))
    から引く. fixed_theta / fixed_sigma / fixed_v を指定した量は学習しない.

    Args:
        dataset: データセット.
        system: ODE 系.
        pf: フィルタの設定.
        prior: 事前分布. None の場合は PriorSpec.default(system, dataset).

    Returns:
        PosteriorSamples (method="rdem"). 最終時刻の粒子を等重みに
        リサンプリングしたもので, x0 は各粒子の t1 での祖先の状態.

    Raises:
        InvalidInputError: 次元が一致しない場合.
        DegeneracyError: ESS が 5 未満になった場合 (時刻の添字つき).
    """
    pf = pf if pf is not None else FilterConfig()
    prior = prior if prior is not None else PriorSpec.default(system, dataset)
    dataset.check_system(system)
    prior.check_system(system)
    q, p = system.param_dim, dataset.state_dim
    count = pf.particle_count
    times = dataset.times
    y = dataset.observations

    fixed_theta = _fixed(pf.fixed_theta, q, "fixed_theta")
    if fixed_theta is not None:
        system.check_params(fixed_theta)
    fixed_sigma = _fixed(pf.fixed_sigma, p, "fixed_sigma")
    fixed_v = _fixed(pf.fixed_v, p, "fixed_v")
    if (fixed_sigma is not None and np.any(fixed_sigma < 0.0)) or (
        fixed_v is not None and np.any(fixed_v < 0.0)
    ):
        raise InvalidInputError("fixed_sigma と fixed_v は 0 以上である必要があります")
    if fixed_sigma is None and prior.sigma_fixed is not None:
        fixed_sigma = prior.sigma_fixed

    rng = np.random.default_rng(pf.seed)
    theta = (
        np.tile(fixed_theta, (count, 1))
        if fixed_theta is not None
        else prior.sample_theta(rng, count)
    )
    sigma2 = (
        np.tile(fixed_sigma**2, (count, 1))
        if fixed_sigma is not None
        else prior.sample_sigma2(rng, count)
    )
    if fixed_v is not None:
        v = np.tile(fixed_v, (count, 1))
    else:
        spread = np.var(y, axis=0)
        base = V_INIT_FRACTION * np.where(spread > 0.0, spread, 1.0)
        v = base * np.exp(rng.standard_normal((count, p)))
    cloud = _ParameterCloud(
        theta,
        sigma2,
        v,
        BoxTransform(prior.theta_lower, prior.theta_upper),
        (fixed_theta is None, fixed_sigma is None, fixed_v is None),
    )
    x = prior.sample_x0(rng, count)
    ancestors = x.copy()

    ess_history = np.empty(len(times))
    state_means = np.empty((len(times), p))
    log_w = np.full(count, -np.log(count))
    log_evidence = 0.0
    resamples = 0

    with TimerContext("rdem_filter", logger) as timer:
        for i in range(len(times)):
            if i > 0:
                weights = np.exp(log_w)
                if 1.0 / np.sum(weights * weights) < 0.5 * count:
                    index = systematic_resample(rng, weights)
                    x, ancestors = x[index], ancestors[index]
                    cloud.select(index)
                    log_w = np.full(count, -np.log(count))
                    weights = np.exp(log_w)
                    resamples += 1
                cloud.shrink(rng, weights, pf.discount)
                x = propagate(
                    system,
                    x,
                    times[i - 1],
                    times[i],
                    cloud.theta,
                    pf.refine,
                    strict=False,
                )
                x = x + np.sqrt(cloud.v) * rng.standard_normal(x.shape)
                if pf.jitter > 0.0:
                    x = x + pf.jitter * rng.standard_normal(x.shape)

            increment = _log_likelihood(y[i], x, cloud.sigma2)
            combined = log_w + increment
            total = logsumexp(combined)
            if not np.isfinite(total):
                raise DegeneracyError(i, 0.0)
            log_evidence += float(total)
            log_w = combined - total
            weights = np.exp(log_w)
            ess = 1.0 / np.sum(weights * weights)
            ess_history[i] = ess
            if ess < MIN_ESS:
                raise DegeneracyError(i, ess)
            state_means[i] = weights @ np.where(np.isfinite(x), x, 0.0)
            logger.debug(f"t={times[i]:.4g}: ESS={ess:.1f}")

    index = systematic_resample(rng, np.exp(log_w))
    cloud.select(index)
    logger.info(
        f"rdem_filter: particles={count}, resamples={resamples}, "
        f"log_evidence={log_evidence:.6g}"
    )
    return PosteriorSamples(
        method="rdem",
        theta=cloud.theta,
        sigma=np.sqrt(cloud.sigma2),
        x0=ancestors[index],
        seed=pf.seed,
        runtime=timer.elapsed,
        grid=dataset.grid,
        ess_history=ess_history,
        state_means=state_means,
        log_evidence=log_evidence,
    )
