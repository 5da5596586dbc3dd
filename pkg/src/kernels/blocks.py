"""
Residual slot blocks: y = x + Op(LN(x)) around one searched operation.

A SepConv slot stacks `sepconv_repeats` separable convolutions with ReLU in
between; MHSA and FFN slots hold a single operation.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.searchspace import OpCode, OpKind

from .counter import MacCounter
from .functional import backward, forward
from .instance import AuxKind, OpDims, OpInstance, init_op

logger = logging.getLogger(__name__)


@dataclass
class SlotBlock:
    """Pre-LN residual wrapper around the stages of one searched operation."""
    code: OpCode
    stages: List[OpInstance]
    norm: Optional[OpInstance] = None
    name: str = ""

    def forward(self, x: np.ndarray, counter: Optional[MacCounter] = None,
                cache: Optional[dict] = None) -> np.ndarray:
        h = x
        if self.norm is not None:
            norm_cache = {} if cache is not None else None
            h = forward(self.norm, h, counter, norm_cache)
            if cache is not None:
                cache["norm"] = norm_cache
        stage_caches = []
        for i, stage in enumerate(self.stages):
            if i > 0:
                h = np.maximum(h, 0.0)
            sc = {} if cache is not None else None
            h = forward(stage, h, counter, sc)
            stage_caches.append(sc)
        if cache is not None:
            cache["stages"] = stage_caches
        return x + h

    def backward(self, dy: np.ndarray, cache: dict) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        grads: Dict[str, np.ndarray] = {}
        dh = dy
        for i in range(len(self.stages) - 1, -1, -1):
            stage_cache = cache["stages"][i]
            dh, g = backward(self.stages[i], dh, stage_cache)
            for wname, gw in g.items():
                grads[f"stage{i}/{wname}"] = gw
            if i > 0:
                # relu(z) > 0 exactly where z > 0
                dh = dh * (_stage_input(self.stages[i], stage_cache) > 0)
        if self.norm is not None:
            dh, g = backward(self.norm, dh, cache["norm"])
            for wname, gw in g.items():
                grads[f"norm/{wname}"] = gw
        return dy + dh, grads

    @property
    def weights(self) -> Dict[str, np.ndarray]:
        """Flat name -> array view of every weight in the block."""
        flat = {}
        if self.norm is not None:
            for wname, w in self.norm.weights.items():
                flat[f"norm/{wname}"] = w
        for i, stage in enumerate(self.stages):
            for wname, w in stage.weights.items():
                flat[f"stage{i}/{wname}"] = w
        return flat

    def parameter_count(self) -> int:
        return int(sum(w.size for w in self.weights.values()))


def _stage_input(stage: OpInstance, cache: dict) -> np.ndarray:
    """Post-ReLU input of `stage`, recovered from its cache."""
    if stage.kind == "sep":
        xp = cache["xp"]
        p = (stage.dims.kernel - 1) // 2
        return xp[p:xp.shape[0] - p]
    return cache["x"]


def build_slot_block(code: OpCode, d: int, seed: int, name: str,
                     ffn_filter: int, ffn_kernel: int,
                     sepconv_repeats: int = 2, bias: bool = True,
                     layernorm: bool = True) -> SlotBlock:
    """
    Instantiate the slot block for `code` at hidden size d.

    Raises:
        KernelConfigError: If MHSA heads do not divide d or dims are inconsistent
    """
    if code.kind == OpKind.MHSA:
        stages = [init_op(code, OpDims(d, d, heads=code.param, bias=bias), seed, f"{name}/stage0")]
    elif code.kind == OpKind.SEPCONV:
        stages = [
            init_op(code, OpDims(d, d, kernel=code.param, bias=bias), seed, f"{name}/stage{i}")
            for i in range(max(sepconv_repeats, 1))
        ]
    else:
        stages = [init_op(code, OpDims(d, d, hidden=ffn_filter, kernel=ffn_kernel, bias=bias),
                          seed, f"{name}/stage0")]
    norm = init_op(AuxKind.LAYERNORM, OpDims(d, d), seed, f"{name}/norm") if layernorm else None
    return SlotBlock(code=code, stages=stages, norm=norm, name=name)
