"""Workspace operations package."""

from .creator import (
    OUTPUT_DIR_ENV,
    IWorkspaceCreator,
    WorkspaceCreator,
    default_base_dir,
)
from .models import Workspace

__all__ = [
    "IWorkspaceCreator",
    "OUTPUT_DIR_ENV",
    "Workspace",
    "WorkspaceCreator",
    "default_base_dir",
]
