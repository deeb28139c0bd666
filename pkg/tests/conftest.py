"""共通フィクスチャ."""

import logging
from collections.abc import Iterator

import numpy as np
import pytest

from odeinfer.logging import ROOT_LOGGER_NAME, LoggerFactory
from odeinfer.models import OdeSystem, TimeGrid, builtin
from odeinfer.simulate import NoiseSpec, generate
from odeinfer.simulate.dataset import Dataset


@pytest.fixture(autouse=True)
def reset_package_logger() -> Iterator[None]:
    """CLI が構成した odeinfer ロガーを元に戻し, caplog で捕捉できるようにする."""
    yield
    root = logging.getLogger(ROOT_LOGGER_NAME)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(logging.NOTSET)
    root.propagate = True
    LoggerFactory._loggers.clear()


def _decay_field(x: np.ndarray, t: object, theta: np.ndarray) -> np.ndarray:
    return theta[..., :1] * x


@pytest.fixture
def decay() -> OdeSystem:
    """ẋ = θx (θ ∈ [-2, 2])."""
    return OdeSystem(
        name="decay",
        state_dim=1,
        param_dim=1,
        field=_decay_field,
        lower=np.array([-2.0]),
        upper=np.array([2.0]),
        default_theta=np.array([-0.5]),
        default_x0=np.array([1.0]),
    )


@pytest.fixture
def fhn() -> OdeSystem:
    """FitzHugh-Nagumo."""
    return builtin("fhn")


@pytest.fixture
def fhn_clean(fhn: OdeSystem) -> Dataset:
    """ノイズなしの短い FitzHugh-Nagumo データ (T=10, n=101)."""
    grid = TimeGrid.uniform(10.0, 101)
    return generate(
        fhn, [0.2, 0.2, 3.0], [-1.0, 1.0], grid, NoiseSpec.isotropic(0.0, 2), seed=0
    )


@pytest.fixture
def fhn_noisy(fhn: OdeSystem) -> Dataset:
    """σ=0.1 の短い FitzHugh-Nagumo データ (T=10, n=101)."""
    grid = TimeGrid.uniform(10.0, 101)
    return generate(
        fhn, [0.2, 0.2, 3.0], [-1.0, 1.0], grid, NoiseSpec.isotropic(0.1, 2), seed=3
    )
