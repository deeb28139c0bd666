"""Prior module.

θ, σ^2, x0 の独立な事前分布と, 有界な θ を実数全体に写す変換.

* θ: 箱の上の一様分布 (既定は系の範囲).
* σ_c^2: 座標ごとの逆ガンマ分布 InvGamma(shape, scale).
* x0_c: 座標ごとの正規分布 N(mean, sd^2). sd=0 は点質量.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit, logit
from scipy.stats import invgamma, norm

from ..errors import InvalidInputError
from ..models import OdeSystem
from ..simulate import Dataset

DEFAULT_SIGMA_SHAPE = 2.0
DEFAULT_SIGMA_SCALE = 0.5
DEFAULT_X0_SD = 1.0


def _vector(values: ArrayLike, size: int, label: str) -> np.ndarray:
    array = np.array(np.broadcast_to(np.asarray(values, dtype=float), (size,)))
    array.setflags(write=False)
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{label} に非有限値が含まれています")
    return array


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """(θ, σ^2, x0) の独立な事前分布.

    Args:
        theta_lower: θ の一様分布の下限 (有限).
        theta_upper: θ の一様分布の上限 (有限).
        sigma_shape: σ_c^2 の逆ガンマ分布の形状 (正).
        sigma_scale: σ_c^2 の逆ガンマ分布の尺度 (正).
        x0_mean: x0 の平均.
        x0_sd: x0 の標準偏差 (0 以上).
        sigma_fixed: 指定時は σ を既知としてこの値に固定する.
    """

    theta_lower: np.ndarray
    theta_upper: np.ndarray
    sigma_shape: np.ndarray
    sigma_scale: np.ndarray
    x0_mean: np.ndarray
    x0_sd: np.ndarray
    sigma_fixed: np.ndarray | None = None

    def __post_init__(self) -> None:
        """ハイパーパラメータを検証する."""
        lower = np.asarray(self.theta_lower, dtype=float).reshape(-1)
        q = lower.size
        p = np.asarray(self.x0_mean, dtype=float).reshape(-1).size
        values = {
            "theta_lower": _vector(lower, q, "theta_lower"),
            "theta_upper": _vector(self.theta_upper, q, "theta_upper"),
            "sigma_shape": _vector(self.sigma_shape, p, "sigma_shape"),
            "sigma_scale": _vector(self.sigma_scale, p, "sigma_scale"),
            "x0_mean": _vector(self.x0_mean, p, "x0_mean"),
            "x0_sd": _vector(self.x0_sd, p, "x0_sd"),
        }
        if np.any(values["theta_lower"] >= values["theta_upper"]):
            raise InvalidInputError("θ の事前分布の下限は上限より小さい必要があります")
        if np.any(values["sigma_shape"] <= 0.0) or np.any(values["sigma_scale"] <= 0.0):
            raise InvalidInputError("逆ガンマ分布の形状と尺度は正である必要があります")
        if np.any(values["x0_sd"] < 0.0):
            raise InvalidInputError("x0 の標準偏差は 0 以上である必要があります")
        if self.sigma_fixed is not None:
            values["sigma_fixed"] = _vector(self.sigma_fixed, p, "sigma_fixed")
            if np.any(values["sigma_fixed"] < 0.0):
                raise InvalidInputError("固定する σ は 0 以上である必要があります")
        for name, value in values.items():
            object.__setattr__(self, name, value)

    @classmethod
    def default(
        cls,
        system: OdeSystem,
        dataset: Dataset | None = None,
        *,
        theta_lower: ArrayLike | None = None,
        theta_upper: ArrayLike | None = None,
        sigma_shape: float = DEFAULT_SIGMA_SHAPE,
        sigma_scale: float = DEFAULT_SIGMA_SCALE,
        x0_mean: ArrayLike | None = None,
        x0_sd: ArrayLike = DEFAULT_X0_SD,
        sigma_fixed: ArrayLike | None = None,
    ) -> "PriorSpec":
        """系とデータから既定の事前分布を作る.

        θ は系の範囲 (または指定の箱) 上の一様分布, x0 の平均は最初の観測
        y(t1) (データがない場合は系の既定初期値).

        Raises:
            InvalidInputError: θ の箱が有限でない場合.
        """
        lower = system.lower if theta_lower is None else np.asarray(theta_lower, float)
        upper = system.upper if theta_upper is None else np.asarray(theta_upper, float)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidInputError(
                f"{system.name}: θ の一様事前分布には有限の箱が必要です "
                "(theta_lower/theta_upper を指定してください)"
            )
        if x0_mean is None:
            if dataset is not None:
                x0_mean = dataset.observations[0]
            elif system.default_x0 is not None:
                x0_mean = system.default_x0
            else:
                x0_mean = np.zeros(system.state_dim)
        return cls(
            theta_lower=lower,
            theta_upper=upper,
            sigma_shape=sigma_shape,
            sigma_scale=sigma_scale,
            x0_mean=x0_mean,
            x0_sd=x0_sd,
            sigma_fixed=sigma_fixed,
        )

    @property
    def param_dim(self) -> int:
        """θ の次元."""
        return int(self.theta_lower.size)

    @property
    def state_dim(self) -> int:
        """状態次元."""
        return int(self.x0_mean.size)

    def check_system(self, system: OdeSystem) -> None:
        """系と次元が一致するか検証する."""
        if self.param_dim != system.param_dim or self.state_dim != system.state_dim:
            raise InvalidInputError(
                f"事前分布の次元 (q={self.param_dim}, p={self.state_dim}) が系 "
                f"{system.name} (q={system.param_dim}, p={system.state_dim}) と不一致"
            )

    def contains_theta(self, theta: ArrayLike) -> np.ndarray:
        """θ が箱の中にあるか. バッチ評価可."""
        theta = np.asarray(theta, dtype=float)
        inside = (theta >= self.theta_lower) & (theta <= self.theta_upper)
        return np.all(inside, axis=-1)

    def log_theta(self, theta: ArrayLike) -> float:
        """θ の対数事前密度 (定数項を除く). 箱の外は -inf."""
        return 0.0 if bool(self.contains_theta(theta)) else -np.inf

    def log_x0(self, x0: ArrayLike) -> float:
        """x0 の対数事前密度."""
        x0 = np.asarray(x0, dtype=float)
        point = self.x0_sd == 0.0
        if np.any(point & (x0 != self.x0_mean)):
            return -np.inf
        spread = ~point
        return float(
            np.sum(norm.logpdf(x0[spread], self.x0_mean[spread], self.x0_sd[spread]))
        )

    def sample_theta(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """θ を (size, q) で引く."""
        return rng.uniform(
            self.theta_lower, self.theta_upper, size=(size, self.param_dim)
        )

    def sample_sigma2(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """σ^2 を (size, p) で引く (固定時はその2乗)."""
        if self.sigma_fixed is not None:
            return np.tile(self.sigma_fixed**2, (size, 1))
        return invgamma.rvs(
            self.sigma_shape,
            scale=self.sigma_scale,
            size=(size, self.state_dim),
            random_state=rng,
        )

    def sample_x0(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """x0 を (size, p) で引く."""
        z = rng.standard_normal((size, self.state_dim))
        return self.x0_mean + self.x0_sd * z

    def sigma2_conditional(
        self, rng: np.random.Generator, ssr: np.ndarray, n: int
    ) -> np.ndarray:
        """残差平方和 ssr (座標ごと) と観測数 n を与えた σ^2 の完全条件付き分布から引く.

        InvGamma(shape + n/2, scale + ssr/2). 固定時は固定値の2乗.
        """
        if self.sigma_fixed is not None:
            return self.sigma_fixed**2
        return invgamma.rvs(
            self.sigma_shape + 0.5 * n,
            scale=self.sigma_scale + 0.5 * np.asarray(ssr, dtype=float),
            random_state=rng,
        )


class BoxTransform:
    """範囲付きの値を実数全体に写す座標ごとの全単射.

    両側有限ならロジット, 片側有限なら対数, 無限なら恒等.

    Args:
        lower: 下限 (-inf 可).
        upper: 上限 (inf 可).
    """

    # 端点の写像が有限になるようにずらす幅
    _EDGE = 1e-12

    def __init__(self, lower: ArrayLike, upper: ArrayLike) -> None:
        """BoxTransformを初期化."""
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        finite_lo = np.isfinite(self.lower)
        finite_hi = np.isfinite(self.upper)
        self._both = finite_lo & finite_hi
        self._lower_only = finite_lo & ~finite_hi
        self._upper_only = ~finite_lo & finite_hi
        self._width = np.where(self._both, self.upper - self.lower, 1.0)
        self._lo = np.where(finite_lo, self.lower, 0.0)
        self._hi = np.where(finite_hi, self.upper, 0.0)

    def forward(self, values: ArrayLike) -> np.ndarray:
        """範囲内の値 → 実数."""
        values = np.asarray(values, dtype=float)
        unit = np.clip((values - self._lo) / self._width, self._EDGE, 1.0 - self._EDGE)
        with np.errstate(divide="ignore", invalid="ignore"):
            above = np.log(np.maximum(values - self._lo, self._EDGE))
            below = np.log(np.maximum(self._hi - values, self._EDGE))
        return np.where(
            self._both,
            logit(unit),
            np.where(
                self._lower_only, above, np.where(self._upper_only, below, values)
            ),
        )

    def inverse(self, z: ArrayLike) -> np.ndarray:
        """実数 → 範囲内の値."""
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(
                self._both,
                self._lo + self._width * expit(z),
                np.where(
                    self._lower_only,
                    self._lo + np.exp(z),
                    np.where(self._upper_only, self._hi - np.exp(z), z),
                ),
            )
