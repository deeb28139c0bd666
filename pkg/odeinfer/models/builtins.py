"""Built-in systems module.

FitzHugh-Nagumo, SIR, Lorenz-96 の組み込み ODE 系.
SYSTEMS レジストリに登録され, builtin(name, **kwargs) で取得できる.
"""

from typing import Any

import numpy as np

from ..errors import InvalidInputError
from ..registry import Registry
from .system import OdeSystem

SYSTEMS = Registry("systems")


def _stack(*components: np.ndarray) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*components), axis=-1)


def _fhn_field(x: np.ndarray, t: Any, theta: np.ndarray) -> np.ndarray:
    v, r = x[..., 0], x[..., 1]
    a, b, c = theta[..., 0], theta[..., 1], theta[..., 2]
    # v*v*v は乗算のみ (バッチ長によらずビット一致)
    dv = c * (v - v * v * v / 3.0 + r)
    dr = -(v - a + b * r) / c
    return _stack(dv, dr)


def _fhn_jacobian(x: np.ndarray, t: Any, theta: np.ndarray) -> np.ndarray:
    v = x[..., 0]
    b, c = theta[..., 1], theta[..., 2]
    row1 = _stack(c * (1.0 - v * v), c)
    row2 = _stack(-1.0 / c, -b / c)
    return np.stack(np.broadcast_arrays(row1, row2), axis=-2)


@SYSTEMS.register("fitzhugh_nagumo", "fhn")
def fitzhugh_nagumo() -> OdeSystem:
    """FitzHugh-Nagumo 系 (p=2, q=3).

    dV/dt = θ3 (V - V^3/3 + R), dR/dt = -(V - θ1 + θ2 R) / θ3.
    範囲は -0.8 < θ1, θ2 < 0.8, 0 < θ3 < 8.
    """
    return OdeSystem(
        name="fitzhugh_nagumo",
        state_dim=2,
        param_dim=3,
        field=_fhn_field,
        lower=[-0.8, -0.8, 0.0],
        upper=[0.8, 0.8, 8.0],
        param_names=("a", "b", "c"),
        jacobian=_fhn_jacobian,
        default_theta=[0.2, 0.2, 3.0],
        default_x0=[-1.0, 1.0],
    )


@SYSTEMS.register("sir")
def sir(population: float = 1000.0) -> OdeSystem:
    """SIR 感染症モデル (p=3, q=2, θ=(β, γ)).

    dS/dt = -β I S / N, dI/dt = β I S / N - γ I, dR/dt = γ I.

    Args:
        population: 総人口 N (正).
    """
    if not np.isfinite(population) or population <= 0.0:
        raise InvalidInputError(f"sir: N は正である必要があります: {population}")
    n = float(population)

    def field(x: np.ndarray, t: Any, theta: np.ndarray) -> np.ndarray:
        s, i = x[..., 0], x[..., 1]
        beta, gamma = theta[..., 0], theta[..., 1]
        infection = beta * i * s / n
        recovery = gamma * i
        return _stack(-infection, infection - recovery, recovery)

    return OdeSystem(
        name="sir",
        state_dim=3,
        param_dim=2,
        field=field,
        lower=[0.0, 0.0],
        upper=[10.0, 10.0],
        param_names=("beta", "gamma"),
        default_theta=[0.5, 0.1],
        default_x0=[0.99 * n, 0.01 * n, 0.0],
    )


@SYSTEMS.register("lorenz96")
def lorenz96(dim: int = 10, forcing: float = 8.0) -> OdeSystem:
    """Lorenz-96 系 (q=1, 外力 F を推定対象のパラメータとする).

    dX_j/dt = (X_{j+1} - X_{j-2}) X_{j-1} - X_j + F. 添字は循環.

    Args:
        dim: 変数の数 p (4 以上).
        forcing: 既定の真値として使う F.
    """
    if int(dim) != dim or dim < 4:
        raise InvalidInputError(f"lorenz96: p は 4 以上の整数である必要があります: {dim}")

    def field(x: np.ndarray, t: Any, theta: np.ndarray) -> np.ndarray:
        ahead = np.roll(x, -1, axis=-1)
        behind2 = np.roll(x, 2, axis=-1)
        behind = np.roll(x, 1, axis=-1)
        return (ahead - behind2) * behind - x + theta[..., 0:1]

    x0 = np.full(int(dim), float(forcing))
    x0[0] += 0.01
    return OdeSystem(
        name="lorenz96",
        state_dim=int(dim),
        param_dim=1,
        field=field,
        lower=[-20.0],
        upper=[20.0],
        param_names=("F",),
        default_theta=[float(forcing)],
        default_x0=x0,
    )


def builtin(name: str, **kwargs: Any) -> OdeSystem:
    """名前から組み込み系を構築する.

    Raises:
        UnknownNameError: 未登録の名前の場合.
        InvalidInputError: 引数が不正な場合.
    """
    return SYSTEMS.create(name, **kwargs)
