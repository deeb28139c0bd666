"""OdeInfer main class module.

ODE パラメータ推定の操作を集約したファサードクラス.
"""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from numpy.typing import ArrayLike

from .bayes import PosteriorSamples, PriorSpec, QuantileBands, state_bands
from .benchmark import BenchmarkCase, BenchmarkResult, run_benchmark
from .config import ConfigLoaderFacade, MethodSettings
from .errors import InvalidInputError
from .frequentist import EstimateReport
from .logging import ILoggerFactory, LoggerFactory
from .methods import ESTIMATORS, SAMPLERS
from .models import SYSTEMS, OdeSystem, TimeGrid
from .registry import IRegistry
from .simulate import Dataset, NoiseSpec, generate
from .timer import ITimerFactory, TimerContext, TimerFactory
from .workspace import IWorkspaceCreator, Workspace, WorkspaceCreator


class OdeInfer:
    """ODE パラメータ推定の操作を集約したファサードクラス.

    系, 推定量, サンプラーは名前でレジストリから引く. どの依存も差し替えられる.

    Args:
        workspace_creator: 実行ディレクトリ作成の実装.
        logger_factory: ロガー生成の実装.
        timer_factory: タイマー生成の実装.
        config_loader: 設定ローダーの実装.
        systems: ODE 系のレジストリ.
        estimators: 頻度論的推定量のレジストリ.
        samplers: ベイズサンプラーのレジストリ.
    """

    def __init__(
        self,
        workspace_creator: IWorkspaceCreator | None = None,
        logger_factory: ILoggerFactory | None = None,
        timer_factory: ITimerFactory | None = None,
        config_loader: ConfigLoaderFacade | None = None,
        systems: IRegistry | None = None,
        estimators: IRegistry | None = None,
        samplers: IRegistry | None = None,
    ) -> None:
        """OdeInferを初期化."""
        self._workspace_creator = workspace_creator or WorkspaceCreator()
        self._logger_factory = logger_factory or LoggerFactory()
        self._timer_factory = timer_factory or TimerFactory()
        self._config_loader = config_loader or ConfigLoaderFacade()
        self._systems = systems if systems is not None else SYSTEMS
        self._estimators = estimators if estimators is not None else ESTIMATORS
        self._samplers = samplers if samplers is not None else SAMPLERS
        self._logger = logging.getLogger(__name__)

    def system(self, name: str, **kwargs: Any) -> OdeSystem:
        """名前から ODE 系を構築.

        Args:
            name: 系の名前 ("fhn", "sir", "lorenz96" など).
            **kwargs: 系の構築引数 (sir の population, lorenz96 の dim, forcing).

        Returns:
            ODE 系.

        Raises:
            UnknownNameError: 未登録の名前の場合.

        Examples:
            >>> tool = OdeInfer()
            >>> fhn = tool.system("fhn")
            >>> fhn.param_dim
            3
        """
        system: OdeSystem = self._systems.create(name, **kwargs)
        return system

    def simulate(
        self,
        system: OdeSystem,
        theta: ArrayLike | None = None,
        x0: ArrayLike | None = None,
        sigma: float | ArrayLike = 0.5,
        t_end: float = 20.0,
        n: int = 401,
        seed: int = 1,
        refine: int = 10,
    ) -> Dataset:
        """合成データセットを生成.

        Args:
            system: ODE 系.
            theta: 真の θ. Noneの場合は系の既定値.
            x0: 真の初期状態. Noneの場合は系の既定値.
            sigma: 観測ノイズの標準偏差 (分散ではない). スカラーなら全座標共通.
            t_end: 観測区間 [0, t_end] の終端.
            n: 観測点数.
            seed: 乱数シード.
            refine: 観測間隔あたりの RK4 ステップ数.

        Returns:
            真値情報付きのデータセット.

        Examples:
            >>> tool = OdeInfer()
            >>> data = tool.simulate(tool.system("fhn"), sigma=0.5, seed=1)
            >>> data.n
            401
        """
        theta = system.default_theta if theta is None else theta
        x0 = system.default_x0 if x0 is None else x0
        if theta is None or x0 is None:
            raise InvalidInputError(f"{system.name} には既定の θ / x0 がありません")
        if isinstance(sigma, (int, float)):
            noise = NoiseSpec.isotropic(float(sigma), system.state_dim)
        else:
            noise = NoiseSpec(sigma)
        grid = TimeGrid.uniform(t_end, n)
        return generate(system, theta, x0, grid, noise, seed, refine)

    def fit(
        self,
        method: str,
        dataset: Dataset,
        system: OdeSystem,
        settings: MethodSettings | None = None,
    ) -> EstimateReport:
        """頻度論的推定量を名前で実行.

        Args:
            method: 推定量の名前 ("nls", "two_step", "pda", "profiling").
            dataset: データセット.
            system: ODE 系.
            settings: ハイパーパラメータ. Noneの場合は既定値.

        Returns:
            推定結果.

        Raises:
            UnknownNameError: 未登録の推定量の場合.

        Examples:
            >>> report = tool.fit("two_step", data, tool.system("fhn"))
            >>> report.theta_hat
            (0.19..., 0.21..., 2.98...)
        """
        estimator = self._estimators.get(method)
        self._logger.info(f"fit: {method} on {system.name} (n={dataset.n})")
        settings = settings or MethodSettings()
        report: EstimateReport = estimator(dataset, system, settings)
        return report

    def posterior(
        self,
        method: str,
        dataset: Dataset,
        system: OdeSystem,
        settings: MethodSettings | None = None,
        prior: PriorSpec | None = None,
    ) -> PosteriorSamples:
        """ベイズサンプラーを名前で実行.

        Args:
            method: サンプラーの名前 ("mh", "collocation", "two_step_bayes", "rdem").
            dataset: データセット.
            system: ODE 系.
            settings: ハイパーパラメータ. Noneの場合は既定値.
            prior: 事前分布. Noneの場合は PriorSpec.default(system, dataset).

        Returns:
            事後サンプル.

        Raises:
            UnknownNameError: 未登録のサンプラーの場合.
        """
        sampler = self._samplers.get(method)
        self._logger.info(f"posterior: {method} on {system.name} (n={dataset.n})")
        samples: PosteriorSamples = sampler(
            dataset, system, settings or MethodSettings(), prior
        )
        return samples

    def bands(
        self,
        samples: PosteriorSamples,
        grid: TimeGrid | None = None,
        system: OdeSystem | None = None,
        refine: int = 10,
    ) -> QuantileBands:
        """事後サンプルから 5%/50%/95% の分位点帯を作る.

        Examples:
            >>> bands = tool.bands(samples, data.grid, fhn)
            >>> bands.coverage(truth.states)
            array([0.97, 0.95])
        """
        return state_bands(samples, grid, system, refine)

    def benchmark(
        self,
        methods: Sequence[str],
        seeds: Sequence[int],
        case: BenchmarkCase | None = None,
        workers: int = 1,
    ) -> list[BenchmarkResult]:
        """合成データ上で手法を比較.

        Args:
            methods: 手法名のリスト.
            seeds: シードのリスト.
            case: データ生成条件と設定. Noneの場合は FHN の既定条件.
            workers: 並列プロセス数.

        Returns:
            (手法, シード) 順の結果.
        """
        return run_benchmark(case or BenchmarkCase(), methods, seeds, workers)

    def load_settings(
        self, path: str | Path, overrides: dict[str, Any] | None = None
    ) -> MethodSettings:
        """設定ファイル (.json/.yaml) を読み込み, MethodSettings として検証.

        Args:
            path: 設定ファイルのパス.
            overrides: ファイルの値より優先する設定.

        Returns:
            検証済みの設定.

        Raises:
            FileNotFoundError: ファイルが存在しない場合.
            ValueError: 形式が未対応, またはバリデーションエラーの場合.

        Examples:
            >>> settings = tool.load_settings("settings.yaml", {"refine": 4})
            >>> settings.refine
            4
        """
        return self._config_loader.load(str(path), MethodSettings, overrides)

    def get_logger(
        self,
        name: str,
        log_dir: str | Path | None = None,
        level: int = logging.INFO,
    ) -> logging.Logger:
        """odeinfer 名前空間のロガー. log_dir を渡すと実行ディレクトリにも書く."""
        return self._logger_factory.create(name, log_dir=log_dir, level=level)

    def timer(
        self,
        name: str,
        logger: logging.Logger | None = None,
    ) -> TimerContext:
        """経過時間を logger に INFO で残すタイマー.

        Examples:
            >>> with tool.timer("benchmark") as timer:
            ...     tool.benchmark(["two_step"], [1])
            >>> timer.elapsed
        """
        return self._timer_factory.create(name, logger=logger)

    def create_workspace(
        self,
        base_dir: str | Path | None = None,
        subdirs: list[str] | None = None,
    ) -> Workspace:
        """出力先の実行ディレクトリ base_dir/yyyymmdd_NNN/ を作る.

        base_dir を省略すると ODEINFER_OUTPUT_DIR, それもなければ outputs.
        """
        return self._workspace_creator.create(base_dir, subdirs=subdirs)
