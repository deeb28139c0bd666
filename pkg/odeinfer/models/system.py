"""ODE system module.

ベクトル場 f(x, t; θ) とパラメータ範囲を持つ OdeSystem の定義.

ベクトル場は先頭軸でのバッチ評価に対応する: x の形は (..., p), θ の形は
(..., q) で互いにブロードキャスト可能, t はスカラーまたは先頭軸に
ブロードキャスト可能な配列. 戻り値の形は (..., p).
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from ..errors import BoundsError, InvalidInputError

FieldFn = Callable[[np.ndarray, np.ndarray | float, np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray, np.ndarray | float, np.ndarray], np.ndarray]

BOUNDS_TOL = 1e-12

# 中心差分の刻み (float64 の機械イプシロンの立方根)
_FD_STEP = float(np.cbrt(np.finfo(float).eps))


def _frozen(values: ArrayLike) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class OdeSystem:
    """名前付きの ODE 系 dx/dt = f(x, t; θ).

    Args:
        name: 識別名.
        state_dim: 状態次元 p.
        param_dim: パラメータ次元 q.
        field: バッチ評価可能なベクトル場.
        lower: パラメータ下限 (長さ q, -inf 可).
        upper: パラメータ上限 (長さ q, inf 可).
        param_names: パラメータ名.
        jacobian: ∂f/∂x を (..., p, p) で返す関数. None の場合は中心差分.
        default_theta: 既定の真値 (シミュレーション用).
        default_x0: 既定の初期値 (シミュレーション用).
    """

    name: str
    state_dim: int
    param_dim: int
    field: FieldFn
    lower: np.ndarray
    upper: np.ndarray
    param_names: tuple[str, ...] = ()
    jacobian: JacobianFn | None = None
    default_theta: np.ndarray | None = field(default=None)
    default_x0: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        """次元と範囲を検証し, 配列を読み取り専用にする."""
        if self.state_dim < 1 or self.param_dim < 1:
            raise InvalidInputError(
                f"{self.name}: 状態次元とパラメータ次元は正である必要があります"
            )
        lower = _frozen(self.lower)
        upper = _frozen(self.upper)
        if lower.shape != (self.param_dim,) or upper.shape != (self.param_dim,):
            raise InvalidInputError(
                f"{self.name}: 範囲の長さがパラメータ次元 {self.param_dim} と不一致"
            )
        if np.any(lower >= upper):
            raise InvalidInputError(f"{self.name}: 下限は上限より小さい必要があります")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if not self.param_names:
            names = tuple(f"theta{j + 1}" for j in range(self.param_dim))
            object.__setattr__(self, "param_names", names)
        if self.default_theta is not None:
            object.__setattr__(self, "default_theta", _frozen(self.default_theta))
        if self.default_x0 is not None:
            object.__setattr__(self, "default_x0", _frozen(self.default_x0))

    @property
    def bounds(self) -> list[tuple[float, float]]:
        """パラメータごとの (下限, 上限)."""
        return [(float(lo), float(hi)) for lo, hi in zip(self.lower, self.upper)]

    def in_bounds(self, theta: ArrayLike) -> np.ndarray:
        """θ が範囲内 (許容誤差 1e-12) かどうか. バッチ評価可."""
        theta = np.asarray(theta, dtype=float)
        inside = (theta >= self.lower - BOUNDS_TOL) & (theta <= self.upper + BOUNDS_TOL)
        return np.all(inside, axis=-1)

    def check_state(self, x: ArrayLike, label: str = "x") -> np.ndarray:
        """状態ベクトルの次元を検証して float 配列で返す."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.state_dim,):
            raise InvalidInputError(
                f"{self.name}: {label} の次元 {x.shape} が p={self.state_dim} と不一致"
            )
        return x

    def check_params(self, theta: ArrayLike) -> np.ndarray:
        """パラメータの次元と範囲を検証して float 配列で返す.

        Raises:
            InvalidInputError: 次元が q と一致しない場合.
            BoundsError: 範囲外の場合.
        """
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.param_dim,):
            raise InvalidInputError(
                f"{self.name}: theta の次元 {theta.shape} が q={self.param_dim} と不一致"
            )
        if not np.all(np.isfinite(theta)) or not self.in_bounds(theta):
            raise BoundsError(
                f"{self.name}: theta={theta.tolist()} が範囲 {self.bounds} の外です"
            )
        return theta

    def eval_field(self, x: ArrayLike, t: float, theta: ArrayLike) -> np.ndarray:
        """検証付きで f(x, t; θ) を1点評価する."""
        x = self.check_state(x)
        theta = self.check_params(theta)
        return np.asarray(self.field(x, float(t), theta), dtype=float)

    def state_jacobian(
        self, x: np.ndarray, t: np.ndarray | float, theta: np.ndarray
    ) -> np.ndarray:
        """∂f/∂x をバッチで返す. 形は (..., p, p), 添字は [..., 出力, 入力]."""
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x, t, theta), dtype=float)

        x = np.asarray(x, dtype=float)
        columns = []
        for d in range(self.state_dim):
            step = _FD_STEP * np.maximum(1.0, np.abs(x[..., d]))
            forward = x.copy()
            backward = x.copy()
            forward[..., d] += step
            backward[..., d] -= step
            diff = self.field(forward, t, theta) - self.field(backward, t, theta)
            columns.append(diff / (2.0 * step)[..., None])
        return np.stack(columns, axis=-1)

    def start_box(self) -> tuple[np.ndarray, np.ndarray]:
        """開始点を一様に引くための有限の箱."""
        return finite_box(self.lower, self.upper)

    def interior_point(self) -> np.ndarray:
        """開始点として使う範囲の中点 (無限の場合は start_box の中点)."""
        lo, hi = self.start_box()
        return 0.5 * (lo + hi)


def eval_field(
    system: OdeSystem, x: ArrayLike, t: float, theta: ArrayLike
) -> np.ndarray:
    """f(x, t; θ) を評価する.

    Args:
        system: ODE 系.
        x: 状態 (長さ p).
        t: 時刻.
        theta: パラメータ (長さ q, 範囲内).

    Returns:
        導関数 (長さ p).

    Raises:
        InvalidInputError: 次元が一致しない場合.
        BoundsError: θ が範囲外の場合.
    """
    return system.eval_field(x, t, theta)


def finite_box(lower: ArrayLike, upper: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """無限を含む範囲を有限の箱に置き換える.

    片側が無限の場合は有限側から幅 2, 両側が無限の場合は [-1, 1].
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lo = np.where(
        np.isfinite(lower), lower, np.where(np.isfinite(upper), upper - 2.0, -1.0)
    )
    hi = np.where(np.isfinite(upper), upper, lo + 2.0)
    return lo, hi
