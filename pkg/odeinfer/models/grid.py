"""Time grid and trajectory module.

観測時刻の格子 TimeGrid と, 格子上の状態列 Trajectory.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DatasetParseError, InvalidInputError


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """狭義単調増加する有限の時刻列 (2点以上, 0 以上).

    Args:
        points: 時刻列.

    Raises:
        InvalidInputError: 不変条件を満たさない場合.
    """

    points: np.ndarray

    def __post_init__(self) -> None:
        """時刻列を検証して読み取り専用にする."""
        points = np.array(self.points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise InvalidInputError("時刻格子には2点以上が必要です")
        if not np.all(np.isfinite(points)):
            raise InvalidInputError("時刻格子に非有限値が含まれています")
        if points[0] < 0.0:
            raise InvalidInputError(f"時刻は 0 以上である必要があります: {points[0]}")
        if np.any(np.diff(points) <= 0.0):
            raise InvalidInputError("non-increasing grid: 時刻が狭義単調増加ではありません")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @classmethod
    def uniform(cls, t_end: float, n: int, t_start: float = 0.0) -> "TimeGrid":
        """[t_start, t_end] 上の等間隔格子を作る."""
        return cls(np.linspace(t_start, t_end, n))

    @property
    def start(self) -> float:
        """最初の時刻."""
        return float(self.points[0])

    @property
    def end(self) -> float:
        """最後の時刻."""
        return float(self.points[-1])

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        """等間隔かどうか."""
        gaps = np.diff(self.points)
        return bool(np.allclose(gaps, gaps[0], rtol=rtol, atol=0.0))

    def __len__(self) -> int:
        """点の数."""
        return int(self.points.size)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """格子上の状態列 x(t_i).

    Args:
        grid: 時刻格子.
        states: 形 (n, p) の状態.
    """

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self) -> None:
        """形を検証して読み取り専用にする."""
        states = np.array(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] != len(self.grid):
            raise InvalidInputError(
                f"状態の形 {states.shape} が格子長 {len(self.grid)} と不一致"
            )
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def state_dim(self) -> int:
        """状態次元 p."""
        return int(self.states.shape[1])

    def to_table(self) -> str:
        """`t,x1,...,xp` ヘッダ付きの区切りテキストを返す."""
        return format_table(self.grid.points, self.states, prefix="x")

    def save(self, path: str | Path) -> Path:
        """テーブル形式で保存する."""
        path = Path(path)
        path.write_text(self.to_table(), encoding="utf-8")
        return path


def format_table(times: np.ndarray, values: np.ndarray, prefix: str) -> str:
    """時刻と値を 17 桁精度の CSV テキストにする."""
    header = ",".join(["t"] + [f"{prefix}{j + 1}" for j in range(values.shape[1])])
    rows = [
        ",".join(f"{v:.17g}" for v in (t, *row)) for t, row in zip(times, values)
    ]
    return "\n".join([header, *rows]) + "\n"


def load_trajectory(path: str | Path) -> Trajectory:
    """Trajectory.save の出力を読み込む.

    Raises:
        DatasetParseError: 行の列数や数値が不正な場合.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("t,"):
        raise DatasetParseError("ヘッダ 't,x1,...' がありません", 1)
    width = len(lines[0].split(","))
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rows.append(parse_row(line, width, number))
    if not rows:
        raise InvalidInputError("軌道に行がありません")
    table = np.array(rows)
    return Trajectory(TimeGrid(table[:, 0]), table[:, 1:])


def parse_row(line: str, width: int, number: int) -> list[float]:
    """カンマ区切りの1行を float のリストにする."""
    cells = line.split(",")
    if len(cells) != width:
        raise DatasetParseError(f"列数 {len(cells)} がヘッダの {width} と不一致", number)
    try:
        return [float(cell) for cell in cells]
    except ValueError as e:
        raise DatasetParseError(f"数値に変換できません: {e}", number) from e


def as_grid(grid: "TimeGrid | ArrayLike") -> TimeGrid:
    """TimeGrid または時刻列を TimeGrid にそろえる."""
    return grid if isinstance(grid, TimeGrid) else TimeGrid(np.asarray(grid))
