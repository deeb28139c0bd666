"""Posterior samples module.

事後サンプル PosteriorSamples, 状態の分位点帯 QuantileBands と,
それらのテーブル形式での保存・読み込み.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DatasetParseError, InsufficientSampleError, InvalidInputError
from ..models import OdeSystem, TimeGrid, integrate_states
from ..models.grid import parse_row

logger = logging.getLogger(__name__)

MIN_DRAWS = 20
BAND_LEVELS = (0.05, 0.5, 0.95)


def _matrix(values: ArrayLike | None) -> np.ndarray | None:
    if values is None:
        return None
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """事後分布からのサンプル.

    Attributes:
        method: 手法名.
        theta: θ のサンプル (m, q).
        sigma: σ のサンプル (m, p).
        x0: x0 のサンプル (m, p).
        seed: 乱数シード.
        runtime: 実行時間 [s].
        grid: states の時刻格子.
        states: サンプルごとの軌道 (m, n, p).
        coefficients: サンプルごとのスプライン係数 (m, k, p).
        acceptance_rate: burnin 後の受理率 (MCMC).
        ess_history: 時刻ごとの有効サンプルサイズ (粒子フィルタ).
        state_means: 時刻ごとのフィルタ平均 (粒子フィルタ).
        log_evidence: 対数周辺尤度の推定値 (粒子フィルタ).
        n_excluded: 除外したサンプル数 (二段階ベイズ).
        n_rejected_blowups: 数値発散で棄却した提案数 (MCMC).
        warnings: 実行中に出た警告メッセージ.
    """

    method: str
    theta: np.ndarray
    sigma: np.ndarray
    x0: np.ndarray
    seed: int
    runtime: float = 0.0
    grid: TimeGrid | None = None
    states: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    acceptance_rate: float | None = None
    ess_history: np.ndarray | None = None
    state_means: np.ndarray | None = None
    log_evidence: float | None = None
    n_excluded: int = 0
    n_rejected_blowups: int = 0
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        """形を検証して読み取り専用にする."""
        for name in ("theta", "sigma", "x0"):
            array = np.array(getattr(self, name), dtype=float)
            if array.ndim != 2:
                raise InvalidInputError(f"{name} は2次元配列である必要があります")
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        m = self.theta.shape[0]
        if self.sigma.shape[0] != m or self.x0.shape[0] != m:
            raise InvalidInputError("θ, σ, x0 のサンプル数が一致しません")
        for name in ("states", "coefficients", "ess_history", "state_means"):
            object.__setattr__(self, name, _matrix(getattr(self, name)))
        if self.states is not None and (
            self.grid is None or self.states.shape[:2] != (m, len(self.grid))
        ):
            raise InvalidInputError("states の形がサンプル数と格子に一致しません")

    @property
    def n_draws(self) -> int:
        """サンプル数."""
        return int(self.theta.shape[0])

    def median(self) -> np.ndarray:
        """θ の事後中央値."""
        return np.median(self.theta, axis=0)

    def quantiles(self, levels: ArrayLike) -> np.ndarray:
        """θ の事後分位点 (len(levels), q). 線形補間."""
        return np.quantile(self.theta, levels, axis=0, method="linear")

    def to_table(self) -> str:
        """`draw,theta1..q,sigma1..p,x0_1..p` のテーブル."""
        q = self.theta.shape[1]
        p = self.sigma.shape[1]
        header = ["draw"]
        header += [f"theta{j + 1}" for j in range(q)]
        header += [f"sigma{j + 1}" for j in range(p)]
        header += [f"x0_{j + 1}" for j in range(p)]
        body = np.hstack((self.theta, self.sigma, self.x0))
        rows = [
            ",".join([str(index), *(f"{v:.17g}" for v in row)])
            for index, row in enumerate(body)
        ]
        return "\n".join([",".join(header), *rows]) + "\n"

    def save(self, path: str | Path) -> Path:
        """テーブルを保存する."""
        path = Path(path)
        path.write_text(self.to_table(), encoding="utf-8")
        return path


def load_samples(path: str | Path, method: str = "loaded") -> PosteriorSamples:
    """PosteriorSamples.save の出力を読み込む (θ, σ, x0 のみ).

    Raises:
        DatasetParseError: ヘッダや行が不正な場合.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("draw,"):
        raise DatasetParseError("ヘッダ 'draw,theta1,...' がありません", 1)
    header = lines[0].split(",")
    q = sum(name.startswith("theta") for name in header)
    p = sum(name.startswith("sigma") for name in header)
    if q < 1 or p < 1 or len(header) != 1 + q + 2 * p:
        raise DatasetParseError("ヘッダの列構成が不正です", 1)
    rows = [
        parse_row(line, len(header), number)
        for number, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]
    table = np.array(rows).reshape(-1, len(header))
    return PosteriorSamples(
        method=method,
        theta=table[:, 1 : 1 + q],
        sigma=table[:, 1 + q : 1 + q + p],
        x0=table[:, 1 + q + p :],
        seed=0,
    )


@dataclass(frozen=True, eq=False)
class QuantileBands:
    """座標ごとの事後分位点の帯 (5%, 50%, 95%).

    Attributes:
        grid: 時刻格子.
        lower: 5% 点 (n, p).
        median: 50% 点 (n, p).
        upper: 95% 点 (n, p).
    """

    grid: TimeGrid
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray

    def coverage(self, truth: ArrayLike) -> np.ndarray:
        """真の軌道 (n, p) が帯に入る格子点の割合を座標ごとに返す."""
        truth = np.asarray(truth, dtype=float)
        inside = (self.lower <= truth) & (truth <= self.upper)
        return inside.mean(axis=0)

    def to_table(self) -> str:
        """`t,coord,q05,q50,q95` のテーブル. coord は 1 始まり."""
        rows = ["t,coord,q05,q50,q95"]
        n, p = self.median.shape
        for i in range(n):
            for c in range(p):
                values = (self.lower[i, c], self.median[i, c], self.upper[i, c])
                rows.append(
                    f"{self.grid.points[i]:.17g},{c + 1},"
                    + ",".join(f"{v:.17g}" for v in values)
                )
        return "\n".join(rows) + "\n"

    def save(self, path: str | Path) -> Path:
        """テーブルを保存する."""
        path = Path(path)
        path.write_text(self.to_table(), encoding="utf-8")
        return path


def state_bands(
    samples: PosteriorSamples,
    grid: TimeGrid | None = None,
    system: OdeSystem | None = None,
    refine: int = 10,
) -> QuantileBands:
    """事後サンプルの軌道から点ごとの分位点帯を作る.

    サンプルが格子上の軌道を持たない場合は (θ, x0) から integrate で
    再生成する (system が必要). 分位点は線形補間の経験分位点.

    Args:
        samples: 事後サンプル.
        grid: 時刻格子. None の場合はサンプルの格子.
        system: 軌道の再生成に使う ODE 系.
        refine: 再生成時の RK4 ステップ数.

    Returns:
        QuantileBands.

    Raises:
        InsufficientSampleError: 有効なサンプルが 20 未満の場合.
        InvalidInputError: 軌道がなく system も与えられていない場合.
    """
    if samples.n_draws < MIN_DRAWS:
        raise InsufficientSampleError(
            f"分位点帯には {MIN_DRAWS} 以上のサンプルが必要です (m={samples.n_draws})"
        )
    if samples.states is not None and (grid is None or grid is samples.grid):
        grid = samples.grid
        states = np.asarray(samples.states)
    else:
        grid = grid if grid is not None else samples.grid
        if system is None or grid is None:
            raise InvalidInputError("軌道を再生成するには system と grid が必要です")
        states = integrate_states(
            system, samples.x0, grid.points, samples.theta, refine, strict=False
        )

    finite = np.all(np.isfinite(states), axis=(1, 2))
    if not np.all(finite):
        logger.warning(f"発散した軌道 {int(np.sum(~finite))} 本を除外しました")
        states = states[finite]
    if states.shape[0] < MIN_DRAWS:
        raise InsufficientSampleError(
            f"有限な軌道が {states.shape[0]} 本しかありません ({MIN_DRAWS} 以上必要)"
        )
    lower, median, upper = np.quantile(states, BAND_LEVELS, axis=0, method="linear")
    return QuantileBands(grid=grid, lower=lower, median=median, upper=upper)
