"""
Operation instances: an operation code, its dimensions and its named weights.
Weights are created from a seeded generator keyed by the instance name so that
initialization does not depend on construction order.
"""

import logging
import zlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple, Union

import numpy as np

from src.searchspace import OpCode, OpKind

logger = logging.getLogger(__name__)


class AuxKind(Enum):
    """Kernels that appear in models but are not searched operations."""
    LINEAR = "linear"
    LAYERNORM = "layernorm"
    EMBEDDING = "embedding"
    CONV1D = "conv1d"
    SEPCONV1D = "sepconv1d"
    LENGTH_REG = "length_reg"


class KernelShapeError(ValueError):
    """Raised when a tensor does not match the shape an operation expects."""


class KernelConfigError(ValueError):
    """Raised when operation dimensions are inconsistent (e.g. heads not dividing d)."""


@dataclass(frozen=True)
class OpDims:
    """
    Dimensions of an operation instance.

    `hidden` is the FFN filter width, `kernel` the convolution kernel size
    (FFN conv stage kernel for FFN), `heads` the MHSA head count.
    """
    input: int
    output: int
    hidden: int = 0
    kernel: int = 1
    heads: int = 0
    bias: bool = True
    eps: float = 1e-5
    durations: Tuple[int, ...] = ()


@dataclass
class OpInstance:
    """An operation code with dimensions and a named weight collection."""
    code: Union[OpCode, AuxKind]
    dims: OpDims
    weights: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        """Dispatch name: mhsa, sep, ffn or one of the AuxKind values."""
        if isinstance(self.code, OpCode):
            return self.code.kind.value
        return self.code.value

    def parameter_count(self) -> int:
        return int(sum(w.size for w in self.weights.values()))


def named_generator(seed: int, name: str) -> np.random.Generator:
    """Generator seeded by (seed, name); the same pair always yields the same stream."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode("utf-8"))])


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(1.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def weight_shapes(code: Union[OpCode, AuxKind], dims: OpDims) -> Dict[str, Tuple[Tuple[int, ...], int]]:
    """
    Shapes and fan-in of every weight tensor of an operation.

    Raises:
        KernelConfigError: If the dimensions are inconsistent with the operation
    """
    I, O, K = dims.input, dims.output, dims.kernel
    shapes: Dict[str, Tuple[Tuple[int, ...], int]] = {}

    kind = code.kind if isinstance(code, OpCode) else code
    if kind in (OpKind.SEPCONV, AuxKind.SEPCONV1D):
        if K % 2 != 1:
            raise KernelConfigError(f"SepConv kernel must be odd, got {K}")
        shapes["depthwise"] = ((K, I), K)
        shapes["pointwise"] = ((I, O), I)
        if dims.bias:
            shapes["bias"] = ((O,), I)
    elif kind == OpKind.MHSA:
        if I != O:
            raise KernelConfigError(f"MHSA maps d to d, got {I} -> {O}")
        if dims.heads < 1 or I % dims.heads != 0:
            raise KernelConfigError(f"MHSA heads {dims.heads} must divide hidden size {I}")
        for proj in ("q", "k", "v", "o"):
            shapes[f"w{proj}"] = ((I, I), I)
            if dims.bias:
                shapes[f"b{proj}"] = ((I,), I)
    elif kind == OpKind.FFN:
        if I != O:
            raise KernelConfigError(f"FFN maps d to d, got {I} -> {O}")
        if K % 2 != 1 or dims.hidden < 1:
            raise KernelConfigError(f"FFN needs an odd conv kernel and a filter width, got k={K} f={dims.hidden}")
        shapes["w1"] = ((K, I, dims.hidden), K * I)
        if dims.bias:
            shapes["b1"] = ((dims.hidden,), K * I)
        shapes["w2"] = ((dims.hidden, O), dims.hidden)
        if dims.bias:
            shapes["b2"] = ((O,), dims.hidden)
    elif kind == AuxKind.LINEAR:
        shapes["weight"] = ((I, O), I)
        if dims.bias:
            shapes["bias"] = ((O,), I)
    elif kind == AuxKind.CONV1D:
        if K % 2 != 1:
            raise KernelConfigError(f"Conv1d kernel must be odd, got {K}")
        shapes["weight"] = ((K, I, O), K * I)
        if dims.bias:
            shapes["bias"] = ((O,), K * I)
    elif kind == AuxKind.LAYERNORM:
        if I != O:
            raise KernelConfigError(f"LayerNorm maps d to d, got {I} -> {O}")
        shapes["gain"] = ((I,), 0)
        shapes["shift"] = ((I,), 0)
    elif kind == AuxKind.EMBEDDING:
        shapes["table"] = ((I, O), 1)
    elif kind == AuxKind.LENGTH_REG:
        pass
    else:
        raise KernelConfigError(f"Unsupported operation {code}")
    return shapes


def init_op(code: Union[OpCode, AuxKind], dims: OpDims, seed: int, name: str) -> OpInstance:
    """
    Instantiate an operation with weights uniform in +-sqrt(1/fan_in).

    LayerNorm starts at gain 1, shift 0.
    """
    weights = {}
    for wname, (shape, fan_in) in weight_shapes(code, dims).items():
        if code == AuxKind.LAYERNORM:
            weights[wname] = np.ones(shape) if wname == "gain" else np.zeros(shape)
            continue
        rng = named_generator(seed, f"{name}/{wname}")
        weights[wname] = _uniform(rng, shape, fan_in)
    return OpInstance(code=code, dims=dims, weights=weights)
