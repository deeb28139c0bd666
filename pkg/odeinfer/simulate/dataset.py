"""Dataset module.

観測データセットと, 真値メタデータ付きテキスト形式の保存・読み込み.

ファイル形式::

    # system=fitzhugh_nagumo
    # truth_theta=0.20000000000000001,0.20000000000000001,3
    # truth_x0=-1,1
    # truth_sigma=0.5,0.5
    # seed=1
    t,y1,y2
    0,-1.2,0.7
    ...

値は 17 桁で書き出すため, 保存と読み込みでビット一致する.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DatasetParseError, DatasetValidationError, InvalidInputError
from ..models import OdeSystem, TimeGrid, Trajectory, integrate
from ..models.grid import format_table, parse_row

logger = logging.getLogger(__name__)

_VECTOR_KEYS = ("truth_theta", "truth_x0", "truth_sigma")


def _vector(values: ArrayLike) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """座標ごとの観測ノイズ標準偏差 σ1..σp (対角共分散).

    Raises:
        InvalidInputError: 負または非有限の値がある場合.
    """

    sigmas: np.ndarray

    def __post_init__(self) -> None:
        """値を検証する."""
        sigmas = _vector(self.sigmas)
        if not np.all(np.isfinite(sigmas)) or np.any(sigmas < 0.0):
            raise InvalidInputError(f"σ は 0 以上の有限値: {sigmas.tolist()}")
        object.__setattr__(self, "sigmas", sigmas)

    @classmethod
    def isotropic(cls, sigma: float, dim: int) -> "NoiseSpec":
        """全座標で同じ σ を持つ NoiseSpec."""
        return cls(np.full(dim, float(sigma)))


@dataclass(frozen=True, eq=False)
class TruthInfo:
    """データ生成に使った真値 (ベンチマーク採点用)."""

    theta: np.ndarray
    x0: np.ndarray
    sigma: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        """配列を読み取り専用にする."""
        for name in ("theta", "x0", "sigma"):
            object.__setattr__(self, name, _vector(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class Dataset:
    """観測時刻と観測値 y(t_i).

    Args:
        grid: 観測時刻.
        observations: 形 (n, p) の観測値.
        truth: 生成時の真値 (任意).
        system_name: 生成に使った系の名前 (任意).

    Raises:
        DatasetValidationError: 形が一致しない場合.
    """

    grid: TimeGrid
    observations: np.ndarray
    truth: TruthInfo | None = None
    system_name: str | None = None

    def __post_init__(self) -> None:
        """形を検証する."""
        obs = np.array(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.ndim != 2 or obs.shape[0] != len(self.grid):
            raise DatasetValidationError(
                f"観測の形 {obs.shape} が格子長 {len(self.grid)} と不一致"
            )
        if self.truth is not None:
            p = obs.shape[1]
            if self.truth.x0.size != p or self.truth.sigma.size != p:
                raise DatasetValidationError(
                    f"真値の x0/sigma の次元が観測次元 p={p} と不一致"
                )
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def times(self) -> np.ndarray:
        """観測時刻."""
        return self.grid.points

    @property
    def n(self) -> int:
        """観測数."""
        return int(self.observations.shape[0])

    @property
    def state_dim(self) -> int:
        """観測次元 p."""
        return int(self.observations.shape[1])

    def check_system(self, system: OdeSystem) -> None:
        """系と次元が整合するか検証する.

        Raises:
            InvalidInputError: 次元が一致しない場合.
        """
        if system.state_dim != self.state_dim:
            raise InvalidInputError(
                f"データの次元 p={self.state_dim} が系 {system.name} の "
                f"p={system.state_dim} と不一致"
            )
        if self.truth is not None and self.truth.theta.size != system.param_dim:
            raise InvalidInputError(
                f"真値 theta の次元 {self.truth.theta.size} が系 {system.name} の "
                f"q={system.param_dim} と不一致"
            )

    def truth_trajectory(self, system: OdeSystem, refine: int = 10) -> Trajectory:
        """真値からノイズなしの軌道を再生成する.

        Raises:
            InvalidInputError: 真値がない場合.
        """
        if self.truth is None:
            raise InvalidInputError("データセットに真値がありません")
        self.check_system(system)
        return integrate(system, self.truth.x0, self.grid, self.truth.theta, refine)

    def to_table(self) -> str:
        """コメントヘッダ付きの区切りテキストを返す."""
        lines = []
        if self.system_name is not None:
            lines.append(f"# system={self.system_name}")
        if self.truth is not None:
            for key, values in zip(
                _VECTOR_KEYS, (self.truth.theta, self.truth.x0, self.truth.sigma)
            ):
                lines.append(f"# {key}=" + ",".join(f"{v:.17g}" for v in values))
            if self.truth.seed is not None:
                lines.append(f"# seed={self.truth.seed}")
        body = format_table(self.times, self.observations, prefix="y")
        return "".join(f"{line}\n" for line in lines) + body


def save(dataset: Dataset, path: str | Path) -> Path:
    """データセットを保存する (後勝ち, ロックなし)."""
    path = Path(path)
    path.write_text(dataset.to_table(), encoding="utf-8")
    logger.debug(f"データセットを保存: {path}")
    return path


def load(path: str | Path) -> Dataset:
    """データセットを読み込む.

    Raises:
        DatasetParseError: ヘッダ・行・メタデータが不正な場合 (行番号つき).
        DatasetValidationError: 観測が2点未満, または時刻が増加していない場合.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta: dict[str, str] = {}
    header_line = None
    rows: list[list[float]] = []
    width = 0
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if header_line is None and line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        if header_line is None:
            cells = line.split(",")
            if cells[0] != "t" or len(cells) < 2:
                raise DatasetParseError("ヘッダ 't,y1,...,yp' がありません", number)
            header_line = number
            width = len(cells)
            continue
        rows.append(parse_row(line, width, number))

    if header_line is None:
        raise DatasetParseError("ヘッダ 't,y1,...,yp' がありません", len(lines) + 1)
    if len(rows) < 2:
        raise DatasetValidationError(f"観測は2点以上必要です (n={len(rows)})")

    table = np.array(rows)
    if np.any(np.diff(table[:, 0]) <= 0.0):
        raise DatasetValidationError("non-increasing grid: 時刻が狭義単調増加ではありません")
    try:
        grid = TimeGrid(table[:, 0])
    except InvalidInputError as e:
        raise DatasetValidationError(str(e)) from e
    return Dataset(
        grid=grid,
        observations=table[:, 1:],
        truth=_parse_truth(meta, header_line),
        system_name=meta.get("system"),
    )


def _parse_truth(meta: dict[str, str], line: int) -> TruthInfo | None:
    if not all(key in meta for key in _VECTOR_KEYS):
        return None
    try:
        theta, x0, sigma = (
            [float(v) for v in meta[key].split(",")] for key in _VECTOR_KEYS
        )
        seed = int(meta["seed"]) if "seed" in meta else None
    except ValueError as e:
        raise DatasetParseError(f"真値メタデータが不正です: {e}", line) from e
    return TruthInfo(theta=theta, x0=x0, sigma=sigma, seed=seed)
