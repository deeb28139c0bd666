"""Quadrature module.

罰則項 ∫ ||x'(t) - f(x, t; θ)||^2 dt の数値積分に使う節点と重み.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidInputError
from ..models import TimeGrid


@dataclass(frozen=True, eq=False)
class Quadrature:
    """求積の節点と重み."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        """形を検証する."""
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise InvalidInputError("求積の節点と重みの形が不正です")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def simpson(cls, start: float, end: float, intervals: int) -> "Quadrature":
        """合成 Simpson 則. 区間数は偶数に切り上げる."""
        intervals = max(2, int(intervals) + int(intervals) % 2)
        nodes = np.linspace(start, end, intervals + 1)
        return cls(nodes, _simpson_weights(intervals, (end - start) / intervals))

    @classmethod
    def trapezoid(cls, points: ArrayLike) -> "Quadrature":
        """任意の節点上の台形則."""
        points = np.asarray(points, dtype=float)
        gaps = np.diff(points)
        weights = np.zeros(points.size)
        weights[:-1] += 0.5 * gaps
        weights[1:] += 0.5 * gaps
        return cls(points, weights)

    @classmethod
    def for_grid(cls, grid: TimeGrid, factor: int = 5) -> "Quadrature":
        """観測密度の factor 倍の Simpson 格子."""
        return cls.simpson(grid.start, grid.end, factor * (len(grid) - 1))

    @classmethod
    def on_points(cls, grid: TimeGrid) -> "Quadrature":
        """観測時刻そのものを節点とする求積.

        等間隔で区間数が偶数なら Simpson 則, それ以外は台形則.
        """
        if grid.is_uniform() and (len(grid) - 1) % 2 == 0:
            h = (grid.end - grid.start) / (len(grid) - 1)
            return cls(grid.points, _simpson_weights(len(grid) - 1, h))
        return cls.trapezoid(grid.points)

    def integrate(self, values: ArrayLike) -> np.ndarray:
        """節点上の値 (先頭軸が節点) を積分する."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def _simpson_weights(intervals: int, h: float) -> np.ndarray:
    weights = np.full(intervals + 1, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    return weights * h / 3.0
