"""odeinfer - ノイズを含む観測からの ODE パラメータ推定ツールキット."""

from .benchmark import BenchmarkCase, BenchmarkResult, benchmark_table
from .config import MethodSettings
from .methods import ESTIMATORS, SAMPLERS
from .models import SYSTEMS, OdeSystem, TimeGrid, Trajectory, builtin, integrate
from .simulate import Dataset, generate
from .toolkit import OdeInfer

__version__ = "0.1.0"
__all__ = [
    "BenchmarkCase",
    "BenchmarkResult",
    "Dataset",
    "ESTIMATORS",
    "MethodSettings",
    "OdeInfer",
    "OdeSystem",
    "SAMPLERS",
    "SYSTEMS",
    "TimeGrid",
    "Trajectory",
    "benchmark_table",
    "builtin",
    "generate",
    "integrate",
]
