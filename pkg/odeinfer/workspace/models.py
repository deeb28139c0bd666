"""実行ディレクトリの戻り値モデル."""

from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class Workspace:
    """1回の CLI 実行の出力先 (base_dir/yyyymmdd_NNN/).

    既定の出力ファイルは ``file`` でルート直下に, ログなどのサブディレクトリは
    属性 (``ws.logs``) で引く.
    """

    root: Path
    subdirs: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        """subdirs をタプルにそろえる."""
        object.__setattr__(self, "subdirs", tuple(self.subdirs or ()))

    def file(self, name: str) -> Path:
        """ルート直下のファイルパスを返す."""
        return self.root / name

    def subdir(self, name: str) -> Path:
        """作成済みのサブディレクトリのパスを返す.

        Raises:
            AttributeError: 作成していないサブディレクトリの場合.
        """
        if name not in self.subdirs:
            raise AttributeError(
                f"実行ディレクトリにサブディレクトリ '{name}' はありません "
                f"(作成済み: {', '.join(self.subdirs) or 'なし'})"
            )
        return self.root / name

    def __getattr__(self, name: str) -> Path:
        """ws.logs のようにサブディレクトリを属性で引く."""
        if name.startswith("_") or name in ("root", "subdirs"):
            raise AttributeError(name)
        return self.subdir(name)
