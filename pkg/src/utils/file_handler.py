"""File handling utilities for run outputs and config documents."""

import json
import logging
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)


class FileHandler:
    """Reads config documents and writes run outputs under one output directory."""

    # Config documents larger than this are rejected
    MAX_CONFIG_SIZE = 1024 * 1024

    def __init__(self, output_dir: str = "./runs"):
        """
        Initialize file handler.

        Args:
            output_dir: Directory that receives reports, logs and manifests
        """
        self.output_dir = Path(output_dir)

    def ensure_output_dir(self) -> Path:
        self.output_dir.mkdir(exist_ok=True, parents=True)
        return self.output_dir

    def output_path(self, name: str) -> Path:
        """Path of `name` inside the output directory (the directory is created)."""
        return self.ensure_output_dir() / name

    def read_json(self, file_path: str, max_size: int = MAX_CONFIG_SIZE) -> Any:
        """
        Read and parse a JSON document.

        Args:
            file_path: Path to the document
            max_size: Maximum file size in bytes

        Returns:
            Parsed JSON value

        Raises:
            FileNotFoundError: If the file does not exist
            ValueError: If the file is too large or not valid JSON
        """
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"File {path} does not exist")

        size = path.stat().st_size
        if size > max_size:
            raise ValueError(f"File {path} is too large ({size} bytes). Maximum size is {max_size} bytes.")

        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"File {path} is not valid JSON (line {e.lineno}): {e.msg}") from e

    def write_json(self, name: str, data: Any) -> Path:
        """Write `data` as indented, key-sorted JSON into the output directory."""
        path = self.output_path(name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Saved: {path}")
        return path
