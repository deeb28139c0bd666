"""CLI parser module.

odeinfer コマンドの引数定義.
"""

import argparse
import sys
from typing import NoReturn

from ..benchmark import DEFAULT_METHODS
from ..methods import ESTIMATORS, SAMPLERS


class CliArgumentParser(argparse.ArgumentParser):
    """エラーを1行で標準エラーに出して終了コード 2 で終わるパーサー."""

    def error(self, message: str) -> NoReturn:
        """使い方の表示を省き, 診断を1行だけ出す."""
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(2)


def float_list(text: str) -> list[float]:
    """カンマ区切りの実数列."""
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"カンマ区切りの実数列ではありません: '{text}'")


def name_list(text: str) -> list[str]:
    """カンマ区切りの名前の列."""
    names = [v.strip() for v in text.split(",") if v.strip()]
    if not names:
        raise argparse.ArgumentTypeError("名前が空です")
    return names


def _common(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "-v", "--verbose", action="store_true", help="DEBUG レベルのログを出す"
    )
    group.add_argument(
        "-q", "--quiet", action="store_true", help="WARNING 以上のログだけを出す"
    )
    parser.add_argument(
        "--log-dir",
        default=None,
        help="ログファイルの出力先. 省略時は実行ディレクトリの logs/ (--output 指定時は出さない)",
    )
    parser.add_argument(
        "--output",
        default=None,
        help="出力ファイル. 省略時は $ODEINFER_OUTPUT_DIR (既定 outputs) 下の実行ディレクトリ",
    )


def _system(parser: argparse.ArgumentParser, default: str | None = "fhn") -> None:
    parser.add_argument(
        "--system",
        default=default,
        help="組み込み系の名前 (fhn, sir, lorenz96). fit/posterior では省略時にデータの系",
    )
    parser.add_argument("--population", type=float, default=None, help="SIR の総人口 N")
    parser.add_argument("--dim", type=int, default=None, help="Lorenz-96 の次元 p")
    parser.add_argument(
        "--forcing", type=float, default=None, help="Lorenz-96 の既定の外力 F"
    )


def _method_settings(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", default=None, help="設定ファイル (.json/.yaml). フラグが優先"
    )
    parser.add_argument(
        "--refine", type=int, default=None, help="観測間隔あたりの RK4 ステップ数 (既定 10)"
    )
    parser.add_argument(
        "--knots", type=int, default=None, help="スプラインの内部ノット数 (既定 25)"
    )
    parser.add_argument(
        "--lam", type=float, default=None, help="平滑化パラメータ λ (既定 1.0)"
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="手法の乱数シード (既定 0)"
    )


def build_parser() -> CliArgumentParser:
    """odeinfer のパーサーを構築する."""
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = CliArgumentParser(
        prog="odeinfer",
        description="ノイズを含む観測からの ODE パラメータ推定",
        formatter_class=formatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser(
        "simulate", help="合成データセットを生成", formatter_class=formatter
    )
    _system(simulate)
    simulate.add_argument(
        "--theta", type=float_list, default=None, help="真の θ (省略時は系の既定値)"
    )
    simulate.add_argument(
        "--x0", type=float_list, default=None, help="真の初期状態 (省略時は系の既定値)"
    )
    simulate.add_argument(
        "--sigma",
        type=float_list,
        default=[0.5],
        help="観測ノイズの標準偏差 σ (分散ではない). 1つなら全座標共通",
    )
    simulate.add_argument("--t-end", type=float, default=20.0, help="観測区間の終端 T")
    simulate.add_argument("--n", type=int, default=401, help="観測点数")
    simulate.add_argument("--seed", type=int, default=1, help="ノイズの乱数シード")
    simulate.add_argument(
        "--refine", type=int, default=10, help="観測間隔あたりの RK4 ステップ数"
    )
    _common(simulate)

    fit = commands.add_parser(
        "fit", help="頻度論的推定量を実行", formatter_class=formatter
    )
    fit.add_argument("--input", required=True, help="データセットファイル")
    fit.add_argument(
        "--method", required=True, choices=ESTIMATORS.keys(), help="推定量"
    )
    _system(fit, default=None)
    _method_settings(fit)
    fit.add_argument(
        "--lambda-grid", type=float_list, default=None, help="profiling の λ 候補"
    )
    fit.add_argument(
        "--multistart", type=int, default=None, help="最適化の開始点数 (既定 5)"
    )
    fit.add_argument(
        "--algorithm",
        choices=["nelder-mead", "gauss-newton"],
        default=None,
        help="最適化アルゴリズム (既定 nelder-mead)",
    )
    fit.add_argument(
        "--max-rounds", type=int, default=None, help="pda の最大反復回数 (既定 20)"
    )
    _common(fit)

    posterior = commands.add_parser(
        "posterior", help="ベイズサンプラーを実行", formatter_class=formatter
    )
    posterior.add_argument("--input", required=True, help="データセットファイル")
    posterior.add_argument(
        "--method", required=True, choices=SAMPLERS.keys(), help="サンプラー"
    )
    _system(posterior, default=None)
    _method_settings(posterior)
    posterior.add_argument("--iters", type=int, default=None, help="MCMC の反復数")
    posterior.add_argument("--burnin", type=int, default=None, help="MCMC の burnin")
    posterior.add_argument("--thin", type=int, default=None, help="MCMC の間引き")
    posterior.add_argument(
        "--particles", type=int, default=None, help="粒子フィルタの粒子数 (既定 2000)"
    )
    posterior.add_argument(
        "--discount", type=float, default=None, help="Liu-West の縮小係数 a (既定 0.98)"
    )
    posterior.add_argument(
        "--jitter", type=float, default=None, help="粒子フィルタの追加状態ノイズ (sd)"
    )
    posterior.add_argument(
        "--variant",
        choices=["gradient_match", "rk_match"],
        default=None,
        help="ベイズ2段階法の照合方法",
    )
    _common(posterior)

    bands = commands.add_parser(
        "bands", help="事後サンプルから分位点帯を作る", formatter_class=formatter
    )
    bands.add_argument("--samples", required=True, help="事後サンプルファイル")
    bands.add_argument("--input", required=True, help="格子を取るデータセットファイル")
    _system(bands, default=None)
    bands.add_argument(
        "--refine", type=int, default=10, help="軌道再生成の RK4 ステップ数"
    )
    _common(bands)

    benchmark = commands.add_parser(
        "benchmark", help="合成データで手法を比較", formatter_class=formatter
    )
    benchmark.add_argument(
        "--methods",
        type=name_list,
        default=list(DEFAULT_METHODS),
        help="比較する手法 (カンマ区切り)",
    )
    benchmark.add_argument("--seeds", type=int, default=10, help="シード数")
    benchmark.add_argument("--seed-start", type=int, default=1, help="最初のシード")
    _system(benchmark)
    benchmark.add_argument(
        "--theta", type=float_list, default=None, help="真の θ (省略時は系の既定値)"
    )
    benchmark.add_argument(
        "--x0", type=float_list, default=None, help="真の初期状態 (省略時は系の既定値)"
    )
    benchmark.add_argument("--t-end", type=float, default=20.0, help="観測区間の終端 T")
    benchmark.add_argument("--n", type=int, default=401, help="観測点数")
    benchmark.add_argument(
        "--sigma", type=float, default=0.5, help="観測ノイズの標準偏差 σ (分散ではない)"
    )
    benchmark.add_argument("--workers", type=int, default=1, help="並列プロセス数")
    benchmark.add_argument(
        "--config", default=None, help="手法の設定ファイル (.json/.yaml)"
    )
    benchmark.add_argument(
        "--refine", type=int, default=None, help="観測間隔あたりの RK4 ステップ数 (既定 10)"
    )
    benchmark.add_argument("--iters", type=int, default=None, help="MCMC の反復数")
    benchmark.add_argument("--burnin", type=int, default=None, help="MCMC の burnin")
    benchmark.add_argument(
        "--particles", type=int, default=None, help="粒子フィルタの粒子数"
    )
    _common(benchmark)
    return parser
