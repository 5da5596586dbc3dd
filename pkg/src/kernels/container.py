"""
Flat binary container for operation weights.

Layout (all integers little-endian):
    magic b"LSWC", u32 format version, u32 record count
    per record:
        u16 name length, name (utf-8)
        u16 kind length, kind (utf-8)
        u32 input, output, hidden, kernel, heads; u8 bias flag; f64 eps
        u32 duration count, u32 durations...
        u32 tensor count
        per tensor: u16 name length, name, u8 ndim, u32 shape..., f64 values (row-major)
"""

import logging
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Union

import numpy as np

from src.searchspace import OpCode, OpKind

from .instance import AuxKind, OpDims, OpInstance

logger = logging.getLogger(__name__)

MAGIC = b"LSWC"
FORMAT_VERSION = 1


def _write_str(f: BinaryIO, s: str) -> None:
    data = s.encode("utf-8")
    f.write(struct.pack("<H", len(data)))
    f.write(data)


def _read_exact(f: BinaryIO, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise ValueError("Truncated weight container")
    return data


def _read_str(f: BinaryIO) -> str:
    (n,) = struct.unpack("<H", _read_exact(f, 2))
    return _read_exact(f, n).decode("utf-8")


def _code_from_kind(kind: str, dims: OpDims) -> Union[OpCode, AuxKind]:
    if kind == OpKind.MHSA.value:
        return OpCode(OpKind.MHSA, dims.heads)
    if kind == OpKind.SEPCONV.value:
        return OpCode(OpKind.SEPCONV, dims.kernel)
    if kind == OpKind.FFN.value:
        return OpCode(OpKind.FFN)
    return AuxKind(kind)


def save_weights(path: Union[str, Path], instances: Dict[str, OpInstance]) -> None:
    """Write named operation instances to `path` in container format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(instances)))
        for name, op in instances.items():
            d = op.dims
            _write_str(f, name)
            _write_str(f, op.kind)
            f.write(struct.pack("<5IBd", d.input, d.output, d.hidden, d.kernel, d.heads, int(d.bias), d.eps))
            f.write(struct.pack("<I", len(d.durations)))
            f.write(struct.pack(f"<{len(d.durations)}I", *d.durations))
            f.write(struct.pack("<I", len(op.weights)))
            for wname, w in op.weights.items():
                _write_str(f, wname)
                f.write(struct.pack("<B", w.ndim))
                f.write(struct.pack(f"<{w.ndim}I", *w.shape))
                f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
    logger.info(f"Saved {len(instances)} weight records to {path}")


def load_weights(path: Union[str, Path]) -> Dict[str, OpInstance]:
    """
    Read a container written by save_weights.

    Raises:
        ValueError: If the file is not a weight container or is truncated
    """
    instances: Dict[str, OpInstance] = {}
    with open(path, "rb") as f:
        if _read_exact(f, 4) != MAGIC:
            raise ValueError(f"{path} is not a weight container")
        version, count = struct.unpack("<II", _read_exact(f, 8))
        if version != FORMAT_VERSION:
            raise ValueError(f"Unsupported container version {version}")
        for _ in range(count):
            name = _read_str(f)
            kind = _read_str(f)
            fields = struct.unpack("<5IBd", _read_exact(f, struct.calcsize("<5IBd")))
            (n_dur,) = struct.unpack("<I", _read_exact(f, 4))
            durations = struct.unpack(f"<{n_dur}I", _read_exact(f, 4 * n_dur))
            dims = OpDims(*fields[:5], bias=bool(fields[5]), eps=fields[6], durations=tuple(durations))
            (n_tensors,) = struct.unpack("<I", _read_exact(f, 4))
            weights = {}
            for _ in range(n_tensors):
                wname = _read_str(f)
                (ndim,) = struct.unpack("<B", _read_exact(f, 1))
                shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim))
                size = int(np.prod(shape)) if ndim else 1
                values = np.frombuffer(_read_exact(f, 8 * size), dtype="<f8")
                weights[wname] = values.astype(np.float64).reshape(shape)
            instances[name] = OpInstance(code=_code_from_kind(kind, dims), dims=dims, weights=weights)
    logger.info(f"Loaded {len(instances)} weight records from {path}")
    return instances
