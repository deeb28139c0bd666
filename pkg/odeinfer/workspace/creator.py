"""Workspace creator module.

CLI が出力先を指定されなかったときの実行ディレクトリ作成.
"""

import os
from abc import ABC, abstractmethod
from pathlib import Path

from .models import Workspace
from .timestamp import find_next_index, format_workspace_name, get_current_date_str

OUTPUT_DIR_ENV = "ODEINFER_OUTPUT_DIR"


def default_base_dir() -> Path:
    """既定の出力ベースディレクトリ. 環境変数 ODEINFER_OUTPUT_DIR で上書きできる."""
    return Path(os.environ.get(OUTPUT_DIR_ENV) or "outputs")


class IWorkspaceCreator(ABC):
    """推定結果を書き出す実行ディレクトリの作成."""

    @abstractmethod
    def create(
        self,
        base_dir: str | Path | None = None,
        subdirs: list[str] | None = None,
    ) -> Workspace:
        """base_dir 下に新しい実行ディレクトリと subdirs を作って返す."""


class WorkspaceCreator(IWorkspaceCreator):
    """実行ディレクトリ (base_dir/yyyymmdd_NNN/) 作成の実装クラス."""

    def create(
        self,
        base_dir: str | Path | None = None,
        subdirs: list[str] | None = None,
    ) -> Workspace:
        """実行ディレクトリを作成.

        Args:
            base_dir: ベースディレクトリ. Noneの場合は default_base_dir().
            subdirs: 作成するサブディレクトリ名のリスト.

        Returns:
            作成された実行ディレクトリ情報.
        """
        base_path = Path(base_dir) if base_dir is not None else default_base_dir()
        base_path.mkdir(parents=True, exist_ok=True)

        date_str = get_current_date_str()
        index = find_next_index(base_path, date_str)
        while True:
            workspace_path = base_path / format_workspace_name(date_str, index)
            try:
                workspace_path.mkdir()
                break
            except FileExistsError:
                # 並行実行で同じ連番を取り合った場合は次を使う
                index += 1

        for subdir in subdirs or []:
            (workspace_path / subdir).mkdir(exist_ok=True)

        return Workspace(root=workspace_path, subdirs=tuple(subdirs or ()))
