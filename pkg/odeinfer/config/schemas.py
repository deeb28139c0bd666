"""推定設定の Pydantic スキーマ.

設定ファイル (.json/.yaml) と CLI フラグはここで定義したモデルで検証される.
"""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Settings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class OptimizerConfig(_Settings):
    """頻度論的推定量の最適化設定.

    Attributes:
        algorithm: "nelder-mead" (導関数不要のシンプレックス法) または
            "gauss-newton" (信頼領域 Gauss-Newton).
        max_iters: 開始点あたりの最大反復回数.
        tolerance: 収束判定の許容誤差.
        multistart_count: 開始点の数. 境界内の一様乱数で生成する.
        seed: 開始点生成の乱数シード.
    """

    algorithm: Literal["nelder-mead", "gauss-newton"] = "nelder-mead"
    max_iters: int = Field(default=2000, ge=1)
    tolerance: float = Field(default=1e-8, gt=0.0)
    multistart_count: int = Field(default=5, ge=1)
    seed: int = 0


class ChainConfig(_Settings):
    """MCMC の連鎖設定.

    proposal_scales を省略すると事前分布の幅から決める.
    提案幅は burnin 中だけ受理率 20-40% を目標に調整し, その後は固定する.
    """

    iters: int = Field(default=20000, ge=1)
    burnin: int = Field(default=5000, ge=0)
    proposal_scales: list[float] | None = None
    seed: int = 0
    adapt_interval: int = Field(default=50, ge=1)
    thin: int = Field(default=1, ge=1)
    keep_states: bool = False
    theta_init: list[float] | None = None

    @model_validator(mode="after")
    def _check_chain(self) -> "ChainConfig":
        if self.iters <= self.burnin:
            raise ValueError(f"iters ({self.iters}) は burnin ({self.burnin}) より大")
        if self.proposal_scales is not None and any(
            s <= 0.0 for s in self.proposal_scales
        ):
            raise ValueError("proposal_scales は全て正である必要があります")
        return self


class FilterConfig(_Settings):
    """Liu-West 粒子フィルタの設定.

    Attributes:
        particle_count: 粒子数 (100 以上).
        discount: カーネル縮小係数 a (0.5 < a < 1).
        jitter: 伝播後の状態に加える追加ノイズの標準偏差 (拡張フィルタ).
        seed: 乱数シード.
        refine: 観測間隔あたりの RK4 ステップ数.
        fixed_theta: 指定時は θ を学習せず固定.
        fixed_sigma: 指定時は観測ノイズ σ を固定.
        fixed_v: 指定時は状態ノイズ分散 V を固定.
    """

    particle_count: int = Field(default=2000, ge=100)
    discount: float = Field(default=0.98, gt=0.5, lt=1.0)
    jitter: float = Field(default=0.0, ge=0.0)
    seed: int = 0
    refine: int = Field(default=1, ge=1)
    fixed_theta: list[float] | None = None
    fixed_sigma: list[float] | None = None
    fixed_v: list[float] | None = None


class SplineConfig(_Settings):
    """B-スプライン基底と求積の設定."""

    n_interior_knots: int = Field(default=25, ge=0)
    quad_factor: int = Field(default=5, ge=1)


class MethodSettings(_Settings):
    """推定手法に渡すハイパーパラメータ一式."""

    refine: int = Field(default=10, ge=1)
    lam: float = Field(default=1.0, gt=0.0)
    lambda_grid: list[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0, 100.0])
    max_rounds: int = Field(default=20, ge=1)
    round_tolerance: float = Field(default=1e-6, gt=0.0)
    variant: Literal["gradient_match", "rk_match"] = "gradient_match"
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    chain: ChainConfig = Field(default_factory=ChainConfig)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    spline: SplineConfig = Field(default_factory=SplineConfig)

    @model_validator(mode="after")
    def _check_grid(self) -> "MethodSettings":
        if not self.lambda_grid or any(v <= 0.0 for v in self.lambda_grid):
            raise ValueError("lambda_grid は空でない正の値の列である必要があります")
        return self


class RunConfig(_Settings):
    """CLI の1回の実行内容."""

    command: Literal["simulate", "fit", "posterior", "bands", "benchmark"]
    system: str = "fhn"
    system_args: dict[str, float] = Field(default_factory=dict)
    method: str | None = None
    seed: int = 0
    input: Path | None = None
    output: Path | None = None
    settings: MethodSettings = Field(default_factory=MethodSettings)

    @model_validator(mode="after")
    def _check_paths(self) -> "RunConfig":
        if (
            self.input is not None
            and self.output is not None
            and self.input.resolve() == self.output.resolve()
        ):
            raise ValueError(f"入力と出力が同じパスです: {self.input}")
        return self
