"""Benchmark module.

合成データに対して複数の推定手法とシードを走らせ, 真値との誤差と
実行時間を比較表にまとめる. 既定は FitzHugh-Nagumo の
θ=(0.2, 0.2, 3), x0=(-1, 1), σ=0.5, T=20, n=401, 10 シード.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .config import MethodSettings
from .errors import InvalidInputError, UnknownNameError
from .frequentist import format_value
from .methods import ESTIMATORS, SAMPLERS
from .models import TimeGrid, builtin
from .simulate import NoiseSpec, generate

logger = logging.getLogger(__name__)

DEFAULT_METHODS = ("nls", "two_step", "profiling", "mh", "rdem")


@dataclass(frozen=True)
class BenchmarkCase:
    """ベンチマークのデータ生成条件と手法の設定.

    Attributes:
        system: 組み込み系の名前.
        system_args: 系の構築引数.
        theta: 真の θ.
        x0: 真の初期状態.
        sigma: 観測ノイズの標準偏差 (全座標共通).
        t_end: 観測区間の終端.
        n: 観測点数.
        refine: データ生成時の RK4 ステップ数.
        settings: 手法のハイパーパラメータ. 乱数シードはセルのシードで上書きする.
    """

    system: str = "fhn"
    system_args: dict[str, float] = field(default_factory=dict)
    theta: tuple[float, ...] = (0.2, 0.2, 3.0)
    x0: tuple[float, ...] = (-1.0, 1.0)
    sigma: float = 0.5
    t_end: float = 20.0
    n: int = 401
    refine: int = 10
    settings: MethodSettings = field(default_factory=MethodSettings)


@dataclass(frozen=True)
class BenchmarkResult:
    """1セル (手法, シード) の結果.

    Attributes:
        method: 手法名.
        seed: データ生成と手法の乱数シード.
        estimate: θ̂ (サンプラーは事後中央値).
        truth: 真の θ.
        runtime: 実行時間 [s].
    """

    method: str
    seed: int
    estimate: tuple[float, ...]
    truth: tuple[float, ...]
    runtime: float

    @property
    def abs_error(self) -> np.ndarray:
        """座標ごとの |θ̂ - θ|."""
        return np.abs(np.asarray(self.estimate) - np.asarray(self.truth))


def _seeded(settings: MethodSettings, seed: int) -> MethodSettings:
    return settings.model_copy(
        update={
            "optimizer": settings.optimizer.model_copy(update={"seed": seed}),
            "chain": settings.chain.model_copy(update={"seed": seed}),
            "filter": settings.filter.model_copy(update={"seed": seed}),
        }
    )


def check_methods(methods: Sequence[str]) -> None:
    """全ての手法名が登録済みか確認する.

    Raises:
        UnknownNameError: 未登録の手法がある場合.
    """
    for method in methods:
        if method not in ESTIMATORS and method not in SAMPLERS:
            raise UnknownNameError(
                f"未登録の手法: '{method}'. "
                f"利用可能: {ESTIMATORS.keys() + SAMPLERS.keys()}"
            )


def run_cell(case: BenchmarkCase, method: str, seed: int) -> BenchmarkResult:
    """1セル分のデータを生成して手法を走らせる.

    joblib のワーカーから呼ばれるためモジュールの最上位に置く.
    """
    check_methods([method])
    system = builtin(case.system, **case.system_args)
    grid = TimeGrid.uniform(case.t_end, case.n)
    noise = NoiseSpec.isotropic(case.sigma, system.state_dim)
    dataset = generate(system, case.theta, case.x0, grid, noise, seed, case.refine)
    settings = _seeded(case.settings, seed)

    if method in ESTIMATORS:
        report = ESTIMATORS.get(method)(dataset, system, settings)
        estimate, runtime = report.theta_hat, report.runtime
    else:
        samples = SAMPLERS.get(method)(dataset, system, settings)
        estimate, runtime = tuple(float(v) for v in samples.median()), samples.runtime
    logger.info(f"{method} seed={seed}: θ̂={format_value(estimate)}")
    return BenchmarkResult(
        method=method,
        seed=seed,
        estimate=tuple(float(v) for v in estimate),
        truth=tuple(float(v) for v in case.theta),
        runtime=float(runtime),
    )


def run_benchmark(
    case: BenchmarkCase,
    methods: Sequence[str],
    seeds: Sequence[int],
    workers: int = 1,
) -> list[BenchmarkResult]:
    """全ての (手法, シード) セルを実行する.

    workers > 1 なら joblib のワーカープロセスで並列に実行する. 結果は常に
    (手法, シード) の辞書順に並べる.

    Raises:
        InvalidInputError: 手法またはシードが空の場合.
        UnknownNameError: 未登録の手法がある場合.
    """
    if not methods or not seeds:
        raise InvalidInputError("ベンチマークには1つ以上の手法とシードが必要です")
    if workers < 1:
        raise InvalidInputError(f"workers は 1 以上: {workers}")
    check_methods(methods)
    cells = sorted((method, seed) for method in set(methods) for seed in set(seeds))
    logger.info(f"ベンチマーク: {len(cells)} セル, workers={workers}")

    results = Parallel(n_jobs=workers)(
        delayed(run_cell)(case, method, seed) for method, seed in cells
    )
    return sorted(results, key=lambda r: (r.method, r.seed))


def benchmark_table(
    results: Sequence[BenchmarkResult], path: str | Path | None = None
) -> str:
    """比較表を作る.

    (手法, シード) ごとの行に続けて, 手法ごとに中央値の要約行
    (seed 列は "median") を置く. 列は method, seed, theta1..q,
    abs_err1..q, runtime.

    Args:
        results: セルの結果.
        path: 指定時は表を書き出す.

    Returns:
        表のテキスト.

    Raises:
        InvalidInputError: 結果が空の場合.
    """
    if not results:
        raise InvalidInputError("ベンチマーク結果が空です")
    q = len(results[0].estimate)
    header = ["method", "seed"]
    header += [f"theta{j + 1}" for j in range(q)]
    header += [f"abs_err{j + 1}" for j in range(q)]
    header.append("runtime")

    rows = [",".join(header)]
    ordered = sorted(results, key=lambda r: (r.method, r.seed))
    for method in sorted({r.method for r in ordered}):
        group = [r for r in ordered if r.method == method]
        for r in group:
            rows.append(
                ",".join(
                    [
                        method,
                        str(r.seed),
                        format_value(r.estimate),
                        format_value(r.abs_error),
                        format_value(r.runtime),
                    ]
                )
            )
        estimates = np.median([r.estimate for r in group], axis=0)
        errors = np.median([r.abs_error for r in group], axis=0)
        runtime = float(np.median([r.runtime for r in group]))
        rows.append(
            ",".join(
                [
                    method,
                    "median",
                    format_value(estimates),
                    format_value(errors),
                    format_value(runtime),
                ]
            )
        )
    text = "\n".join(rows) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
