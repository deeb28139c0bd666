"""合成データの生成と保存."""

from .dataset import Dataset, NoiseSpec, TruthInfo, load, save
from .generator import generate

__all__ = ["Dataset", "NoiseSpec", "TruthInfo", "generate", "load", "save"]
