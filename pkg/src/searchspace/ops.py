"""
Operation vocabulary of the search space.
Defines the candidate operations (MHSA, SepConv, FFN) and their token codec.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

logger = logging.getLogger(__name__)


class OpKind(Enum):
    """Families of candidate operations."""
    MHSA = "mhsa"
    SEPCONV = "sep"
    FFN = "ffn"


class OpCodeError(ValueError):
    """Raised when an operation code or token is not part of the vocabulary."""


@dataclass(frozen=True)
class OpCode:
    """
    One candidate operation.

    `param` is the head count for MHSA, the kernel size for SEPCONV and
    unused (0) for FFN.
    """
    kind: OpKind
    param: int = 0

    # Legal parameter values per family
    MHSA_HEADS = (2, 4, 8)
    SEPCONV_KERNELS = (1, 5, 9, 13, 17, 21, 25)

    def __post_init__(self):
        if self.kind == OpKind.MHSA and self.param not in self.MHSA_HEADS:
            raise OpCodeError(f"MHSA heads must be one of {self.MHSA_HEADS}, got {self.param}")
        if self.kind == OpKind.SEPCONV and self.param not in self.SEPCONV_KERNELS:
            raise OpCodeError(
                f"SepConv kernel must be one of {self.SEPCONV_KERNELS}, got {self.param}"
            )
        if self.kind == OpKind.FFN and self.param != 0:
            raise OpCodeError(f"FFN takes no parameter, got {self.param}")

    @property
    def token(self) -> str:
        """Lowercase compact token used by the architecture codec."""
        if self.kind == OpKind.FFN:
            return "ffn"
        return f"{self.kind.value}{self.param}"

    @classmethod
    def from_token(cls, token: str) -> "OpCode":
        """
        Parse a codec token such as `sep13`, `mhsa4` or `ffn`.

        Raises:
            OpCodeError: If the token does not name a vocabulary operation
        """
        code = _TOKEN_TABLE.get(token.strip().lower())
        if code is None:
            raise OpCodeError(f"Unknown operation token '{token}'")
        return code

    def __str__(self) -> str:
        return self.token


# Canonical order: heads ascending, kernels ascending, FFN last
VOCABULARY: Tuple[OpCode, ...] = (
    tuple(OpCode(OpKind.MHSA, h) for h in OpCode.MHSA_HEADS)
    + tuple(OpCode(OpKind.SEPCONV, k) for k in OpCode.SEPCONV_KERNELS)
    + (OpCode(OpKind.FFN),)
)

_TOKEN_TABLE: Dict[str, OpCode] = {op.token: op for op in VOCABULARY}


def op_vocabulary() -> Tuple[OpCode, ...]:
    """Return the canonical 11-element ordered vocabulary."""
    return VOCABULARY
