"""
Single-path weight-sharing supernet over a search space.

Every (slot, operation) pair owns a separate residual slot block; an
architecture is evaluated by routing through the blocks it selects. The
token embedding, final LayerNorm and output projection are shared.
"""

import hashlib
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.kernels import (
    AuxKind,
    OpDims,
    OpInstance,
    SlotBlock,
    backward,
    build_slot_block,
    forward,
    init_op,
    length_regulate,
    length_regulate_backward,
    sinusoidal_positions,
)
from src.searchspace import Architecture, OpCode, SpaceDef

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToyDims:
    """Dimensions of the desk-scale proxy model and task."""
    hidden: int = 32
    length: int = 24
    vocab: int = 40
    ffn_filter: int = 64
    ffn_kernel: int = 3
    out_dim: int = 8
    max_duration: int = 3
    sepconv_repeats: int = 2

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ToyDims":
        return cls(**{k: int(v) for k, v in data.items()})


@dataclass
class Sample:
    """Token sequence, per-token durations and the frame-level target."""
    tokens: np.ndarray
    durations: np.ndarray
    target: np.ndarray


def block_key(side: str, slot: int, op: OpCode) -> str:
    return f"{side}{slot}/{op.token}"


@dataclass
class SupernetState:
    """
    Weights of every candidate block plus the shared trunk.

    `blocks` holds exactly slots x |vocabulary| entries keyed by
    block_key(); `shared` holds the embedding, final norm and output head.
    """
    space: SpaceDef
    dims: ToyDims
    shared: Dict[str, OpInstance]
    blocks: Dict[str, SlotBlock]
    step: int = 0
    seed: int = 0
    train_losses: List[float] = field(default_factory=list)

    def selected_keys(self, arch: Architecture) -> List[str]:
        keys = [block_key("enc", i, op) for i, op in enumerate(arch.encoder_ops)]
        keys += [block_key("dec", i, op) for i, op in enumerate(arch.decoder_ops)]
        return keys

    def parameters(self, arch: Optional[Architecture] = None) -> Dict[str, np.ndarray]:
        """
        Flat path -> array views of the weights, restricted to `arch` and the
        shared trunk when an architecture is given.
        """
        params = {}
        for name, op in self.shared.items():
            for wname, w in op.weights.items():
                params[f"shared/{name}/{wname}"] = w
        keys = self.selected_keys(arch) if arch is not None else sorted(self.blocks)
        for key in keys:
            for wname, w in self.blocks[key].weights.items():
                params[f"{key}/{wname}"] = w
        return params

    def forward(self, arch: Architecture, sample: Sample, cache: Optional[dict] = None) -> np.ndarray:
        """Predicted frame sequence (T, out_dim) for one sample under `arch`."""
        d = self.dims.hidden
        keys = self.selected_keys(arch)
        n_enc = len(arch.encoder_ops)
        caches: Dict[str, Any] = {}

        sub = {} if cache is not None else None
        h = forward(self.shared["embedding"], sample.tokens, cache=sub) + sinusoidal_positions(len(sample.tokens), d)
        caches["embedding"] = sub
        for key in keys[:n_enc]:
            sub = {} if cache is not None else None
            h = self.blocks[key].forward(h, cache=sub)
            caches[key] = sub
        h = length_regulate(h, sample.durations)
        h = h + sinusoidal_positions(h.shape[0], d)
        for key in keys[n_enc:]:
            sub = {} if cache is not None else None
            h = self.blocks[key].forward(h, cache=sub)
            caches[key] = sub
        for name in ("final_norm", "output"):
            sub = {} if cache is not None else None
            h = forward(self.shared[name], h, cache=sub)
            caches[name] = sub
        if cache is not None:
            cache.update(caches)
            cache["durations"] = sample.durations
        return h

    def backward(self, arch: Architecture, dy: np.ndarray, cache: dict) -> Dict[str, np.ndarray]:
        """Gradients of every selected and shared weight, keyed like parameters(arch)."""
        grads: Dict[str, np.ndarray] = {}
        keys = self.selected_keys(arch)
        n_enc = len(arch.encoder_ops)

        dh = dy
        for name in ("output", "final_norm"):
            dh, g = backward(self.shared[name], dh, cache[name])
            grads.update({f"shared/{name}/{w}": gw for w, gw in g.items()})
        for key in reversed(keys[n_enc:]):
            dh, g = self.blocks[key].backward(dh, cache[key])
            grads.update({f"{key}/{w}": gw for w, gw in g.items()})
        dh = length_regulate_backward(dh, cache["durations"])
        for key in reversed(keys[:n_enc]):
            dh, g = self.blocks[key].backward(dh, cache[key])
            grads.update({f"{key}/{w}": gw for w, gw in g.items()})
        _, g = backward(self.shared["embedding"], dh, cache["embedding"])
        grads.update({f"shared/embedding/{w}": gw for w, gw in g.items()})
        return grads

    def state_hash(self) -> str:
        """sha256 over every weight (sorted by path) and the step counter."""
        digest = hashlib.sha256()
        for path, w in sorted(self.parameters().items()):
            digest.update(path.encode("utf-8"))
            digest.update(np.ascontiguousarray(w, dtype="<f8").tobytes())
        digest.update(str(self.step).encode("utf-8"))
        return digest.hexdigest()

    def weight_hashes(self) -> Dict[str, str]:
        """Per-block and per-shared-op sha256 digests, for isolation checks."""
        hashes = {}
        groups: Dict[str, Dict[str, np.ndarray]] = {k: b.weights for k, b in self.blocks.items()}
        groups.update({f"shared/{k}": op.weights for k, op in self.shared.items()})
        for name, weights in groups.items():
            digest = hashlib.sha256()
            for wname in sorted(weights):
                digest.update(np.ascontiguousarray(weights[wname], dtype="<f8").tobytes())
            hashes[name] = digest.hexdigest()
        return hashes


def build_supernet(space: SpaceDef, dims: ToyDims, seed: int, gain: float = 1.0) -> SupernetState:
    """
    Initialize a supernet with one block per (slot, operation).

    Args:
        space: Search space whose slots and vocabulary the supernet covers
        dims: Toy model dimensions
        seed: Initialization seed
        gain: Multiplier on every block weight except LayerNorm

    Raises:
        KernelConfigError: If an MHSA head count does not divide the hidden size
    """
    d = dims.hidden
    shared = {
        "embedding": init_op(AuxKind.EMBEDDING, OpDims(dims.vocab, d), seed, "shared/embedding"),
        "final_norm": init_op(AuxKind.LAYERNORM, OpDims(d, d), seed, "shared/final_norm"),
        "output": init_op(AuxKind.LINEAR, OpDims(d, dims.out_dim), seed, "shared/output"),
    }
    blocks: Dict[str, SlotBlock] = {}
    for side, slots in (("enc", space.encoder_slots), ("dec", space.decoder_slots)):
        for slot in range(slots):
            for op in space.vocabulary:
                key = block_key(side, slot, op)
                block = build_slot_block(op, d, seed, key, ffn_filter=dims.ffn_filter,
                                         ffn_kernel=dims.ffn_kernel, sepconv_repeats=dims.sepconv_repeats)
                if gain != 1.0:
                    for stage in block.stages:
                        for w in stage.weights.values():
                            w *= gain
                blocks[key] = block
    logger.debug(f"Built supernet with {len(blocks)} blocks over {space.slots} slots")
    return SupernetState(space=space, dims=dims, shared=shared, blocks=blocks, seed=seed)


def sample_loss(state: SupernetState, arch: Architecture, sample: Sample) -> Tuple[float, np.ndarray, dict]:
    """Mean squared error of one sample plus its output gradient and forward cache."""
    cache: dict = {}
    pred = state.forward(arch, sample, cache)
    diff = pred - sample.target
    loss = float(np.mean(diff ** 2))
    return loss, 2.0 * diff / diff.size, cache
