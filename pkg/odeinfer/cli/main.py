"""CLI main module.

odeinfer コマンドの実行. 各サブコマンドは OdeInfer ファサード経由で
処理し, 結果を1つのファイルに書き出してそのパスを標準出力に表示する.
"""

import argparse
import inspect
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..bayes import load_samples
from ..benchmark import BenchmarkCase, benchmark_table
from ..config import MethodSettings, RunConfig
from ..errors import InvalidInputError, OdeInferError
from ..methods import ESTIMATORS, SAMPLERS
from ..models import SYSTEMS, OdeSystem
from ..simulate import Dataset, load, save
from ..toolkit import OdeInfer
from .parser import build_parser

logger = logging.getLogger(__name__)

# 出力先が指定されなかったときの実行ディレクトリ内のファイル名
DEFAULT_FILES = {
    "simulate": "dataset.csv",
    "fit": "report.txt",
    "posterior": "posterior.csv",
    "bands": "bands.csv",
    "benchmark": "benchmark.csv",
}

_HANDLED = (
    OdeInferError,
    ValueError,
    LookupError,
    ArithmeticError,
    RuntimeError,
    OSError,
)


def _one_line(exc: BaseException) -> str:
    if isinstance(exc, ValidationError):
        return "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in exc.errors()
        )
    return " ".join(str(exc).split()) or type(exc).__name__


def _put(target: dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        target[key] = value


def settings_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """フラグから MethodSettings の上書き dict を作る. 未指定のフラグは含めない."""
    overrides: dict[str, Any] = {}
    for flag, key in (
        ("refine", "refine"),
        ("lam", "lam"),
        ("lambda_grid", "lambda_grid"),
        ("max_rounds", "max_rounds"),
        ("variant", "variant"),
    ):
        _put(overrides, key, getattr(args, flag, None))

    seed = getattr(args, "seed", None)
    sections: dict[str, dict[str, Any]] = {
        "spline": {},
        "optimizer": {},
        "chain": {},
        "filter": {},
    }
    _put(sections["spline"], "n_interior_knots", getattr(args, "knots", None))
    _put(sections["optimizer"], "multistart_count", getattr(args, "multistart", None))
    _put(sections["optimizer"], "algorithm", getattr(args, "algorithm", None))
    _put(sections["chain"], "iters", getattr(args, "iters", None))
    _put(sections["chain"], "burnin", getattr(args, "burnin", None))
    _put(sections["chain"], "thin", getattr(args, "thin", None))
    _put(sections["filter"], "particle_count", getattr(args, "particles", None))
    _put(sections["filter"], "discount", getattr(args, "discount", None))
    _put(sections["filter"], "jitter", getattr(args, "jitter", None))
    if args.command == "fit":
        _put(sections["optimizer"], "seed", seed)
    elif args.command == "posterior":
        _put(sections["chain"], "seed", seed)
        _put(sections["filter"], "seed", seed)

    overrides.update({name: values for name, values in sections.items() if values})
    return overrides


def resolve_settings(tool: OdeInfer, args: argparse.Namespace) -> MethodSettings:
    """設定ファイルとフラグから MethodSettings を作る (フラグが優先)."""
    overrides = settings_overrides(args)
    if getattr(args, "config", None):
        return tool.load_settings(args.config, overrides)
    return MethodSettings.model_validate(overrides)


def system_arguments(name: str, args: argparse.Namespace) -> dict[str, Any]:
    """系の構築引数. 系が受け取らない引数が指定された場合はエラー."""
    kwargs: dict[str, Any] = {}
    _put(kwargs, "population", args.population)
    _put(kwargs, "dim", args.dim)
    _put(kwargs, "forcing", args.forcing)
    accepted = inspect.signature(SYSTEMS.get(name)).parameters
    unknown = sorted(set(kwargs) - set(accepted))
    if unknown:
        flags = ", ".join(f"--{key}" for key in unknown)
        raise InvalidInputError(f"系 '{name}' は {flags} を受け取りません")
    return kwargs


def _system_for(
    tool: OdeInfer, args: argparse.Namespace, dataset: Dataset | None = None
) -> tuple[str, dict[str, Any], OdeSystem]:
    name = args.system
    if name is None:
        recorded = dataset.system_name if dataset is not None else None
        name = recorded or "fhn"
    kwargs = system_arguments(name, args)
    return name, kwargs, tool.system(name, **kwargs)


def _validate_run(
    args: argparse.Namespace,
    output: Path,
    name: str,
    kwargs: dict[str, Any],
    settings: MethodSettings | None = None,
    method: str | None = None,
) -> None:
    RunConfig(
        command=args.command,
        system=name,
        system_args=kwargs,
        method=method,
        input=getattr(args, "input", None),
        output=output,
        settings=settings or MethodSettings(),
    )


def cmd_simulate(tool: OdeInfer, args: argparse.Namespace, output: Path) -> Path:
    """simulate: データセットを生成して保存."""
    name, kwargs, system = _system_for(tool, args)
    _validate_run(args, output, name, kwargs)
    sigma = args.sigma[0] if len(args.sigma) == 1 else args.sigma
    dataset = tool.simulate(
        system,
        theta=args.theta,
        x0=args.x0,
        sigma=sigma,
        t_end=args.t_end,
        n=args.n,
        seed=args.seed,
        refine=args.refine,
    )
    return save(dataset, output)


def cmd_fit(tool: OdeInfer, args: argparse.Namespace, output: Path) -> Path:
    """fit: 頻度論的推定量を実行してレコードを保存."""
    dataset = load(args.input)
    name, kwargs, system = _system_for(tool, args, dataset)
    settings = resolve_settings(tool, args)
    _validate_run(args, output, name, kwargs, settings, args.method)
    report = tool.fit(args.method, dataset, system, settings)
    return report.save(output)


def cmd_posterior(tool: OdeInfer, args: argparse.Namespace, output: Path) -> Path:
    """posterior: ベイズサンプラーを実行してサンプル表を保存."""
    dataset = load(args.input)
    name, kwargs, system = _system_for(tool, args, dataset)
    settings = resolve_settings(tool, args)
    _validate_run(args, output, name, kwargs, settings, args.method)
    samples = tool.posterior(args.method, dataset, system, settings)
    return samples.save(output)


def cmd_bands(tool: OdeInfer, args: argparse.Namespace, output: Path) -> Path:
    """bands: 事後サンプルから分位点帯の表を保存."""
    if Path(args.samples).resolve() == output.resolve():
        raise InvalidInputError(f"入力と出力が同じパスです: {args.samples}")
    dataset = load(args.input)
    name, kwargs, system = _system_for(tool, args, dataset)
    _validate_run(args, output, name, kwargs)
    samples = load_samples(args.samples)
    bands = tool.bands(samples, dataset.grid, system, args.refine)
    return bands.save(output)


def cmd_benchmark(tool: OdeInfer, args: argparse.Namespace, output: Path) -> Path:
    """benchmark: (手法, シード) ごとの比較表を保存."""
    name, kwargs, system = _system_for(tool, args)
    settings = resolve_settings(tool, args)
    _validate_run(args, output, name, kwargs, settings)
    theta = args.theta if args.theta is not None else system.default_theta
    x0 = args.x0 if args.x0 is not None else system.default_x0
    if theta is None or x0 is None:
        raise InvalidInputError(f"{system.name} には既定の θ / x0 がありません")
    case = BenchmarkCase(
        system=name,
        system_args=kwargs,
        theta=tuple(float(v) for v in theta),
        x0=tuple(float(v) for v in x0),
        sigma=args.sigma,
        t_end=args.t_end,
        n=args.n,
        settings=settings,
    )
    seeds = list(range(args.seed_start, args.seed_start + args.seeds))
    with tool.timer("benchmark", logger):
        results = tool.benchmark(args.methods, seeds, case, args.workers)
    benchmark_table(results, output)
    return output


COMMANDS: dict[str, Callable[[OdeInfer, argparse.Namespace, Path], Path]] = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "posterior": cmd_posterior,
    "bands": cmd_bands,
    "benchmark": cmd_benchmark,
}


def _check_benchmark_args(
    parser: argparse.ArgumentParser, args: argparse.Namespace
) -> None:
    known = ESTIMATORS.keys() + SAMPLERS.keys()
    for method in args.methods:
        if method not in ESTIMATORS and method not in SAMPLERS:
            parser.error(f"未登録の手法: '{method}' (利用可能: {', '.join(known)})")
    if args.seeds < 1:
        parser.error(f"--seeds は 1 以上: {args.seeds}")
    if args.workers < 1:
        parser.error(f"--workers は 1 以上: {args.workers}")


def run(argv: Sequence[str] | None = None, tool: OdeInfer | None = None) -> int:
    """コマンドを実行して終了コードを返す.

    Args:
        argv: 引数列. Noneの場合は sys.argv[1:].
        tool: 使用するファサード. テストではモックを注入できる.

    Returns:
        0: 成功, 1: 実行時エラー, 2: 引数エラー.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "benchmark":
            _check_benchmark_args(parser, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0

    tool = tool or OdeInfer()
    try:
        if args.output is not None:
            output = Path(args.output)
            log_dir = args.log_dir
        else:
            workspace = tool.create_workspace(subdirs=["logs"])
            output = workspace.file(DEFAULT_FILES[args.command])
            log_dir = args.log_dir or workspace.logs

        level = logging.INFO
        if args.verbose:
            level = logging.DEBUG
        elif args.quiet:
            level = logging.WARNING
        tool.get_logger("odeinfer", log_dir, level)
        written = COMMANDS[args.command](tool, args, output)
    except _HANDLED as exc:
        sys.stderr.write(f"odeinfer {args.command}: error: {_one_line(exc)}\n")
        return 1

    print(written)
    return 0


def main() -> None:
    """コンソールスクリプトのエントリポイント."""
    sys.exit(run())
