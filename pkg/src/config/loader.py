"""
Load validated config documents into domain objects.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from src.costmodel import ModelConfig
from src.search import SearchConfig
from src.searchspace import ArchitectureParseError, OpCodeError, SpaceDef
from src.utils.file_handler import FileHandler

from .schemas import (
    ConfigDocumentError,
    ModelConfigDocument,
    SearchConfigDocument,
    SpaceDocument,
    validate_document,
)

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


def resolve_config_path(name: Union[str, Path]) -> Path:
    """A path as given, or a shipped config under configs/ when only a bare name matches there."""
    path = Path(name)
    if path.exists():
        return path
    for candidate in (CONFIG_DIR / path.name, CONFIG_DIR / f"{path.name}.json"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"Config file {name} does not exist")


def _read(path: Union[str, Path]) -> Dict[str, Any]:
    data = FileHandler().read_json(str(path))
    if not isinstance(data, dict):
        raise ConfigDocumentError(f"{path}: expected a JSON object", source=str(path))
    return data


def _domain(build, source: str):
    try:
        return build()
    except (ArchitectureParseError, OpCodeError) as e:
        raise ConfigDocumentError(f"{source}: {e}", key="architecture", source=source) from e
    except ValueError as e:
        raise ConfigDocumentError(f"{source}: {e}", source=source) from e


def load_space(path: Union[str, Path]) -> SpaceDef:
    """
    Raises:
        ConfigDocumentError: On unknown keys, bad values or unknown operation tokens
    """
    path = resolve_config_path(path)
    doc = validate_document(SpaceDocument, _read(path), source=str(path))
    return _domain(lambda: SpaceDef.from_dict(doc.model_dump()), str(path))


def load_model_config(path: Union[str, Path]) -> ModelConfig:
    path = resolve_config_path(path)
    doc = validate_document(ModelConfigDocument, _read(path), source=str(path))
    config = _domain(lambda: ModelConfig.from_dict(doc.model_dump()), str(path))
    logger.debug(f"Loaded model config '{config.name}' from {path}")
    return config


def load_search_config(path: Union[str, Path], seed: Optional[int] = None) -> SearchConfig:
    """Search config from a document; `seed` overrides the document's seed when given."""
    path = resolve_config_path(path)
    doc = validate_document(SearchConfigDocument, _read(path), source=str(path))
    data = doc.model_dump()
    if data.get("space") is None:
        data.pop("space", None)
    if seed is not None:
        data["seed"] = seed
    return _domain(lambda: SearchConfig.from_dict(data), str(path))
