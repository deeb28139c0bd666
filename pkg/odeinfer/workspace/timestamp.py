"""実行ディレクトリ名 (yyyymmdd_NNN) の日付と連番."""

import re
from datetime import datetime
from pathlib import Path


def get_current_date_str() -> str:
    """今日の日付 (yyyymmdd)."""
    return datetime.now().strftime("%Y%m%d")


def find_next_index(base_dir: Path, date_str: str) -> int:
    """base_dir 下で date_str の日の次に使う連番 (1 始まり) を返す.

    連番が 999 を超えた名前 (yyyymmdd_1000) も数える.
    """
    if not base_dir.is_dir():
        return 1
    pattern = re.compile(rf"{re.escape(date_str)}_(\d+)")
    used = [
        int(match.group(1))
        for path in base_dir.iterdir()
        if path.is_dir() and (match := pattern.fullmatch(path.name))
    ]
    return max(used, default=0) + 1


def format_workspace_name(date_str: str, index: int) -> str:
    """yyyymmdd_NNN 形式の名前."""
    return f"{date_str}_{index:03d}"
