"""
Run manifests: one JSON record per command invocation, written next to its outputs.
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from src import __version__
from src.utils.file_handler import FileHandler

logger = logging.getLogger(__name__)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    seed: int
    config_path: Optional[str] = None
    tool_version: str = __version__
    outputs: Dict[str, str] = field(default_factory=dict)
    started_at: str = field(default_factory=utc_now)
    finished_at: str = ""
    exit_code: int = 0

    @property
    def filename(self) -> str:
        return f"manifest_{self.command}.json"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": 1,
            "command": self.command,
            "config_path": self.config_path,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "outputs": dict(self.outputs),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "exit_code": self.exit_code,
        }

    def finish(self, files: FileHandler, exit_code: int = 0) -> Path:
        """Stamp the end time and write the manifest into the output directory."""
        self.finished_at = utc_now()
        self.exit_code = exit_code
        return files.write_json(self.filename, self.to_dict())
