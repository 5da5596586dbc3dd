"""Search space: operation vocabulary, genotypes, sampling and codec."""

from .ops import OpKind, OpCode, OpCodeError, VOCABULARY, op_vocabulary
from .space import (
    Architecture,
    ArchitectureParseError,
    DEFAULT_SPACE,
    DISCOVERED_ARCH_TEXT,
    SpaceDef,
    SpaceSizeOverflowError,
    encode_onehot,
    enumerate_architectures,
    enumerate_indices,
    format_arch,
    iter_index_chunks,
    parse_arch,
    sample_uniform,
    space_size,
)

__all__ = [
    'OpKind', 'OpCode', 'OpCodeError', 'VOCABULARY', 'op_vocabulary',
    'Architecture', 'ArchitectureParseError', 'DEFAULT_SPACE', 'DISCOVERED_ARCH_TEXT',
    'SpaceDef', 'SpaceSizeOverflowError', 'encode_onehot', 'enumerate_architectures',
    'enumerate_indices', 'format_arch', 'iter_index_chunks', 'parse_arch',
    'sample_uniform', 'space_size',
]
