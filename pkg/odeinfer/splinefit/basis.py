"""B-spline basis module.

両端をクランプした3次 B-スプライン基底. 評価は scipy.interpolate.BSpline に
単位行列の係数を与えて行い, 導関数も解析的に求める.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike
from scipy.interpolate import BSpline

from ..errors import DomainError, InvalidInputError
from ..models import TimeGrid

ORDER = 4
_DEGREE = ORDER - 1

# 区間端の丸め誤差の許容 (区間長に対する相対値)
_EDGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """区間 [start, end] 上の3次 B-スプライン基底.

    基底数は k = 内部ノット数 + 4. 基底は区間上で1の分割をなす.

    Args:
        interior_knots: 区間内部の狭義単調増加なノット.
        start: 区間の左端.
        end: 区間の右端.
    """

    interior_knots: np.ndarray
    start: float
    end: float

    def __post_init__(self) -> None:
        """ノットを検証する."""
        knots = np.array(self.interior_knots, dtype=float).reshape(-1)
        finite = np.isfinite(self.start) and np.isfinite(self.end)
        if not finite or self.start >= self.end:
            raise InvalidInputError(f"基底の区間が不正です: [{self.start}, {self.end}]")
        if knots.size and (
            np.any(np.diff(knots) <= 0.0)
            or knots[0] <= self.start
            or knots[-1] >= self.end
        ):
            raise InvalidInputError("内部ノットは区間内で狭義単調増加である必要があります")
        knots.setflags(write=False)
        object.__setattr__(self, "interior_knots", knots)
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "end", float(self.end))

    @classmethod
    def equally_spaced(cls, start: float, end: float, n_interior: int) -> "SplineBasis":
        """等間隔の内部ノットを持つ基底."""
        if n_interior < 0:
            raise InvalidInputError(f"内部ノット数は 0 以上: {n_interior}")
        knots = np.linspace(start, end, n_interior + 2)[1:-1]
        return cls(knots, start, end)

    @classmethod
    def for_grid(cls, grid: TimeGrid, n_interior: int = 25) -> "SplineBasis":
        """観測格子の区間を覆う等間隔ノットの基底."""
        return cls.equally_spaced(grid.start, grid.end, n_interior)

    @property
    def order(self) -> int:
        """次数 + 1 (3次なので 4)."""
        return ORDER

    @property
    def k(self) -> int:
        """基底関数の数."""
        return int(self.interior_knots.size) + ORDER

    @property
    def knots(self) -> np.ndarray:
        """端点を4重にしたノット列."""
        return np.concatenate(
            (
                np.full(ORDER, self.start),
                self.interior_knots,
                np.full(ORDER, self.end),
            )
        )

    @cached_property
    def _spline(self) -> BSpline:
        return BSpline(self.knots, np.eye(self.k), _DEGREE, extrapolate=False)

    def _check_domain(self, t: ArrayLike) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        slack = _EDGE_RTOL * (self.end - self.start)
        inside = (t >= self.start - slack) & (t <= self.end + slack)
        if not np.all(inside):
            bad = t[~inside][0]
            raise DomainError(
                f"t={bad:.6g} が基底の区間 "
                f"[{self.start:.6g}, {self.end:.6g}] の外です"
            )
        return np.clip(t, self.start, self.end)

    def design(self, t: ArrayLike, nu: int = 0) -> np.ndarray:
        """評価行列 (m, k). nu=1 で導関数.

        Raises:
            DomainError: t が区間外の場合.
        """
        return np.asarray(self._spline(self._check_domain(t), nu=nu))


def eval_basis(basis: SplineBasis, t: float | ArrayLike) -> np.ndarray:
    """b_j(t) を返す. スカラー t なら (k,), 配列なら (m, k)."""
    values = basis.design(t)
    return values[0] if np.ndim(t) == 0 else values


def eval_basis_deriv(basis: SplineBasis, t: float | ArrayLike) -> np.ndarray:
    """b_j'(t) を返す. スカラー t なら (k,), 配列なら (m, k)."""
    values = basis.design(t, nu=1)
    return values[0] if np.ndim(t) == 0 else values
