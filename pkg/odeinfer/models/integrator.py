"""Runge-Kutta integrator module.

固定刻みの古典的 4 次 Runge-Kutta 法による決定的な数値積分.
"""

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidInputError, NumericalBlowupError
from .grid import TimeGrid, Trajectory
from .system import OdeSystem


def _stages(
    system: OdeSystem, x: np.ndarray, t: float, h: float, theta: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    f = system.field
    half = 0.5 * h
    k1 = f(x, t, theta)
    k2 = f(x + half * k1, t + half, theta)
    k3 = f(x + half * k2, t + half, theta)
    k4 = f(x + h * k3, t + h, theta)
    return k1, k2, k3, k4


def _step(
    system: OdeSystem, x: np.ndarray, t: float, h: float, theta: np.ndarray
) -> np.ndarray:
    k1, k2, k3, k4 = _stages(system, x, t, h, theta)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _failed_stage(
    system: OdeSystem, x: np.ndarray, t: float, h: float, theta: np.ndarray
) -> int:
    """最初に非有限値を返したステージ番号 (1-4)."""
    for index, k in enumerate(_stages(system, x, t, h, theta), start=1):
        if not np.all(np.isfinite(k)):
            return index
    return 4


def propagate(
    system: OdeSystem,
    x: np.ndarray,
    t0: float,
    t1: float,
    theta: np.ndarray,
    refine: int,
    strict: bool = True,
) -> np.ndarray:
    """[t0, t1] を refine 等分して RK4 で進める. バッチ状態に対応.

    Raises:
        NumericalBlowupError: strict で非有限値が生じた場合.
    """
    h = (t1 - t0) / refine
    with np.errstate(all="ignore"):
        for s in range(refine):
            t = t0 + s * h
            new = _step(system, x, t, h, theta)
            if strict and not np.all(np.isfinite(new)):
                raise NumericalBlowupError(_failed_stage(system, x, t, h, theta), t)
            x = new
    return x


def rk4_step(
    system: OdeSystem, x: ArrayLike, t: float, h: float, theta: ArrayLike
) -> np.ndarray:
    """RK4 を1ステップ進める.

    Args:
        system: ODE 系.
        x: 現在の状態 (長さ p).
        t: 現在時刻.
        h: 刻み幅 (正).
        theta: パラメータ (範囲内).

    Returns:
        x + (h/6)(k1 + 2k2 + 2k3 + k4).

    Raises:
        InvalidInputError: h が正の有限値でない, または次元不一致の場合.
        BoundsError: θ が範囲外の場合.
        NumericalBlowupError: いずれかのステージで非有限値が生じた場合.
    """
    if not np.isfinite(h) or h <= 0.0:
        raise InvalidInputError(f"刻み幅は正である必要があります: h={h}")
    x = system.check_state(x)
    theta = system.check_params(theta)
    return propagate(system, x, float(t), float(t) + h, theta, refine=1)


def integrate_states(
    system: OdeSystem,
    x0: ArrayLike,
    points: ArrayLike,
    theta: ArrayLike,
    refine: int = 10,
    strict: bool = True,
) -> np.ndarray:
    """格子点上の状態を配列で返す (検証なしの内部向け).

    x0 の形 (..., p) と theta の形 (..., q) の先頭軸はブロードキャストされ,
    戻り値の形は (..., n, p) になる. strict=False では発散した系列の値は
    非有限のまま返す.
    """
    x = np.asarray(x0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    points = np.asarray(points, dtype=float)
    batch = np.broadcast_shapes(x.shape[:-1], theta.shape[:-1])
    x = np.broadcast_to(x, batch + x.shape[-1:]).copy()
    out = np.empty(batch + (points.size, x.shape[-1]))
    out[..., 0, :] = x
    for i in range(points.size - 1):
        x = propagate(system, x, points[i], points[i + 1], theta, refine, strict)
        out[..., i + 1, :] = x
    return out


def integrate(
    system: OdeSystem,
    x0: ArrayLike,
    grid: TimeGrid,
    theta: ArrayLike,
    refine: int = 10,
) -> Trajectory:
    """初期値 x0 から格子上の軌道を求める.

    各観測間隔を refine 等分し, rk4_step を繰り返す. 最初の格子点の状態は x0.

    Args:
        system: ODE 系.
        x0: 初期状態 (長さ p).
        grid: 時刻格子.
        theta: パラメータ (範囲内).
        refine: 観測間隔あたりのステップ数 (1 以上).

    Returns:
        Trajectory.

    Raises:
        InvalidInputError: refine が 1 未満, または次元不一致の場合.
        BoundsError: θ が範囲外の場合.
        NumericalBlowupError: 発散した場合 (失敗時刻つき).
    """
    if int(refine) != refine or refine < 1:
        raise InvalidInputError(f"refine は 1 以上の整数である必要があります: {refine}")
    x0 = system.check_state(x0, "x0")
    theta = system.check_params(theta)
    states = integrate_states(system, x0, grid.points, theta, int(refine))
    return Trajectory(grid, states)
