"""観測方程式 y(t_i) = x(t_i) + ε(t_i) によるデータ生成."""

import logging

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidInputError
from ..models import OdeSystem, TimeGrid, integrate
from .dataset import Dataset, NoiseSpec, TruthInfo

logger = logging.getLogger(__name__)


def generate(
    system: OdeSystem,
    theta: ArrayLike,
    x0: ArrayLike,
    grid: TimeGrid,
    noise: NoiseSpec,
    seed: int,
    refine: int = 10,
) -> Dataset:
    """合成データセットを生成する.

    軌道を integrate で求め, 座標ごとに独立な N(0, σ_c^2) ノイズを加える.
    乱数は numpy の PCG64 (np.random.default_rng(seed)) なので,
    同じ引数とシードからはビット一致した結果が得られる.

    Args:
        system: ODE 系.
        theta: 真のパラメータ.
        x0: 真の初期状態.
        grid: 観測時刻.
        noise: 観測ノイズ.
        seed: 乱数シード.
        refine: 観測間隔あたりの RK4 ステップ数.

    Returns:
        真値つきの Dataset.

    Raises:
        InvalidInputError: 次元が一致しない場合.
        BoundsError: θ が範囲外の場合.
        NumericalBlowupError: 積分が発散した場合.
    """
    if noise.sigmas.size != system.state_dim:
        raise InvalidInputError(
            f"σ の長さ {noise.sigmas.size} が p={system.state_dim} と不一致"
        )
    trajectory = integrate(system, x0, grid, theta, refine)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(trajectory.states.shape) * noise.sigmas
    logger.debug(f"{system.name}: n={len(grid)}, seed={seed} のデータを生成")
    return Dataset(
        grid=grid,
        observations=trajectory.states + eps,
        truth=TruthInfo(
            theta=np.asarray(theta, dtype=float),
            x0=np.asarray(x0, dtype=float),
            sigma=noise.sigmas,
            seed=seed,
        ),
        system_name=system.name,
    )
