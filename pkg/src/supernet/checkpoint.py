"""
Supernet checkpoints: kernel weight container plus a JSON manifest.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from src.kernels import OpInstance, SlotBlock, load_weights, save_weights
from src.searchspace import OpCode, SpaceDef

from .model import SupernetState, ToyDims

logger = logging.getLogger(__name__)

WEIGHTS_FILE = "supernet.weights"
MANIFEST_FILE = "supernet.json"


def save_checkpoint(state: SupernetState, directory: Union[str, Path], fingerprint: Optional[str] = None) -> Path:
    """
    Write weights and manifest into `directory`; returns the manifest path.

    `fingerprint` identifies the training and dataset configuration the
    weights came from; callers compare it before reusing the checkpoint.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    records: Dict[str, OpInstance] = {f"shared/{k}": op for k, op in state.shared.items()}
    for key, block in state.blocks.items():
        if block.norm is not None:
            records[f"{key}/norm"] = block.norm
        for i, stage in enumerate(block.stages):
            records[f"{key}/stage{i}"] = stage
    save_weights(directory / WEIGHTS_FILE, records)

    manifest = {
        "version": 1,
        "space": state.space.to_dict(),
        "dims": state.dims.to_dict(),
        "step": state.step,
        "seed": state.seed,
        "state_hash": state.state_hash(),
        "weights": WEIGHTS_FILE,
    }
    if fingerprint is not None:
        manifest["config_fingerprint"] = fingerprint
    path = directory / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Checkpoint at step {state.step} written to {directory}")
    return path


def read_manifest(directory: Union[str, Path]) -> Dict[str, Any]:
    """Checkpoint manifest of `directory` without loading the weights."""
    return json.loads((Path(directory) / MANIFEST_FILE).read_text(encoding="utf-8"))


def load_checkpoint(directory: Union[str, Path]) -> SupernetState:
    """
    Restore a supernet saved by save_checkpoint.

    Raises:
        ValueError: If the weights do not reproduce the manifest's state hash
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    space = SpaceDef.from_dict(manifest["space"])
    records = load_weights(directory / manifest.get("weights", WEIGHTS_FILE))

    shared = {}
    grouped: Dict[str, Dict[str, OpInstance]] = {}
    for name, op in records.items():
        if name.startswith("shared/"):
            shared[name.split("/", 1)[1]] = op
            continue
        key, part = name.rsplit("/", 1)
        grouped.setdefault(key, {})[part] = op

    blocks = {}
    for key, parts in grouped.items():
        stages = [parts[f"stage{i}"] for i in range(sum(p.startswith("stage") for p in parts))]
        blocks[key] = SlotBlock(code=OpCode.from_token(key.split("/", 1)[1]), stages=stages,
                                norm=parts.get("norm"), name=key)

    state = SupernetState(space=space, dims=ToyDims.from_dict(manifest["dims"]), shared=shared,
                          blocks=blocks, step=int(manifest["step"]), seed=int(manifest.get("seed", 0)))
    if state.state_hash() != manifest["state_hash"]:
        raise ValueError(f"Checkpoint {directory} does not match its recorded state hash")
    logger.info(f"Loaded checkpoint at step {state.step} from {directory}")
    return state
