"""
Search space definition: slot layout, architecture genotypes, sampling,
enumeration, one-hot featurization and the architecture text codec.

Architectures are exchanged as `Architecture` values at API boundaries and as
integer index matrices (one row per candidate, one column per slot) inside the
hot loops of the search, where millions of candidates are handled at once.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .ops import VOCABULARY, OpCode, OpCodeError

logger = logging.getLogger(__name__)

# Enumeration indices are int64 throughout
MAX_SPACE_SIZE = np.iinfo(np.int64).max


class ArchitectureParseError(ValueError):
    """Raised when architecture text does not follow the codec grammar."""

    def __init__(self, message: str, token: Optional[str] = None, position: Optional[int] = None):
        super().__init__(message)
        self.token = token
        self.position = position


class SpaceSizeOverflowError(OverflowError):
    """Raised when a space is too large to index with 64-bit integers."""


@dataclass(frozen=True)
class Architecture:
    """Ordered assignment of one operation per encoder and decoder slot."""
    encoder_ops: Tuple[OpCode, ...]
    decoder_ops: Tuple[OpCode, ...]

    def __post_init__(self):
        object.__setattr__(self, "encoder_ops", tuple(self.encoder_ops))
        object.__setattr__(self, "decoder_ops", tuple(self.decoder_ops))

    @property
    def ops(self) -> Tuple[OpCode, ...]:
        """All slot operations, encoder first."""
        return self.encoder_ops + self.decoder_ops

    def __str__(self) -> str:
        return format_arch(self)


@dataclass(frozen=True)
class SpaceDef:
    """
    Chain-structured search space.

    Defaults to the 4 + 4 slot space over the full 11-operation vocabulary.
    Slot counts and vocabulary are data so reduced spaces can be searched
    exhaustively.
    """
    encoder_slots: int = 4
    decoder_slots: int = 4
    vocabulary: Tuple[OpCode, ...] = field(default=VOCABULARY)

    def __post_init__(self):
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        if self.encoder_slots < 0 or self.decoder_slots < 0:
            raise ValueError("Slot counts must be non-negative")
        if not self.vocabulary:
            raise ValueError("Vocabulary must not be empty")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError("Vocabulary contains duplicate operations")
        # Keep canonical order regardless of how the vocabulary was listed
        canonical = tuple(op for op in VOCABULARY if op in self.vocabulary)
        object.__setattr__(self, "vocabulary", canonical)

    @property
    def slots(self) -> int:
        return self.encoder_slots + self.decoder_slots

    @property
    def feature_count(self) -> int:
        return self.slots * len(self.vocabulary)

    def op_index(self, op: OpCode) -> int:
        """Position of `op` in this space's vocabulary."""
        try:
            return self.vocabulary.index(op)
        except ValueError:
            raise OpCodeError(f"Operation '{op.token}' is not in the space vocabulary") from None

    def validate(self, arch: Architecture) -> None:
        """
        Check that `arch` belongs to this space.

        Raises:
            ValueError: On slot count mismatch or out-of-vocabulary operations
        """
        if len(arch.encoder_ops) != self.encoder_slots or len(arch.decoder_ops) != self.decoder_slots:
            raise ValueError(
                f"Architecture has {len(arch.encoder_ops)}+{len(arch.decoder_ops)} slots, "
                f"space expects {self.encoder_slots}+{self.decoder_slots}"
            )
        for op in arch.ops:
            self.op_index(op)

    # Index-matrix representation

    def to_indices(self, archs: Sequence[Architecture]) -> np.ndarray:
        """Convert architectures into an (n, slots) matrix of vocabulary indices."""
        rows = np.empty((len(archs), self.slots), dtype=np.int64)
        for i, arch in enumerate(archs):
            self.validate(arch)
            rows[i] = [self.op_index(op) for op in arch.ops]
        return rows

    def from_indices(self, rows: np.ndarray) -> List[Architecture]:
        """Convert an (n, slots) index matrix back into architectures."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        archs = []
        for row in rows:
            ops = [self.vocabulary[int(i)] for i in row]
            archs.append(Architecture(tuple(ops[:self.encoder_slots]), tuple(ops[self.encoder_slots:])))
        return archs

    def rank_of(self, rows: np.ndarray) -> np.ndarray:
        """Lexicographic enumeration index of each index row."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        base = len(self.vocabulary)
        ranks = np.zeros(rows.shape[0], dtype=np.int64)
        for s in range(self.slots):
            ranks = ranks * base + rows[:, s]
        return ranks

    def indices_at(self, ranks: np.ndarray) -> np.ndarray:
        """Index rows for the given enumeration indices (inverse of rank_of)."""
        ranks = np.asarray(ranks, dtype=np.int64).copy()
        base = len(self.vocabulary)
        rows = np.empty((ranks.shape[0], self.slots), dtype=np.int64)
        for s in range(self.slots - 1, -1, -1):
            rows[:, s] = ranks % base
            ranks //= base
        return rows

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n i.i.d. uniform index rows."""
        return rng.integers(0, len(self.vocabulary), size=(n, self.slots), dtype=np.int64)

    def onehot_indices(self, rows: np.ndarray) -> np.ndarray:
        """One-hot feature matrix (uint8) for index rows; slot p, op i sets column p*|V|+i."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        base = len(self.vocabulary)
        features = np.zeros((rows.shape[0], self.feature_count), dtype=np.uint8)
        cols = rows + np.arange(self.slots, dtype=np.int64) * base
        np.put_along_axis(features, cols, 1, axis=1)
        return features

    def ordinal_indices(self, rows: np.ndarray) -> np.ndarray:
        """Ordinal features: per slot (kind index, head count or kernel size)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        kinds = np.array([list(type(op.kind)).index(op.kind) for op in self.vocabulary], dtype=np.float64)
        params = np.array([op.param for op in self.vocabulary], dtype=np.float64)
        features = np.empty((rows.shape[0], 2 * self.slots), dtype=np.float64)
        features[:, 0::2] = kinds[rows]
        features[:, 1::2] = params[rows]
        return features

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        return {
            "encoder_slots": self.encoder_slots,
            "decoder_slots": self.decoder_slots,
            "vocabulary": [op.token for op in self.vocabulary],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpaceDef":
        return cls(
            encoder_slots=int(data["encoder_slots"]),
            decoder_slots=int(data["decoder_slots"]),
            vocabulary=tuple(OpCode.from_token(t) for t in data["vocabulary"]),
        )


DEFAULT_SPACE = SpaceDef()


def space_size(space: SpaceDef) -> int:
    """
    Number of architectures in the space, |vocab|^(slots).

    Raises:
        SpaceSizeOverflowError: If the count does not fit a signed 64-bit index
    """
    size = len(space.vocabulary) ** space.slots
    if size > MAX_SPACE_SIZE:
        raise SpaceSizeOverflowError(
            f"Space of {len(space.vocabulary)}^{space.slots} architectures exceeds 64-bit indexing"
        )
    return size


def sample_uniform(space: SpaceDef, seed: int, n: int) -> List[Architecture]:
    """Draw n architectures i.i.d. uniformly; deterministic for a fixed seed."""
    if n < 1:
        raise ValueError(f"Sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return space.from_indices(space.sample_indices(rng, n))


def encode_onehot(arch: Architecture, space: SpaceDef) -> np.ndarray:
    """Binary feature vector of length slots*|vocab| for one architecture."""
    rows = space.to_indices([arch])
    return space.onehot_indices(rows)[0].astype(np.float64)


def enumerate_architectures(space: SpaceDef, offset: int, limit: int) -> List[Architecture]:
    """
    One page of the lexicographic enumeration of the space.

    Raises:
        ValueError: If the page falls outside [0, space_size)
    """
    return space.from_indices(enumerate_indices(space, offset, limit))


def enumerate_indices(space: SpaceDef, offset: int, limit: int) -> np.ndarray:
    """Index-matrix form of enumerate_architectures."""
    size = space_size(space)
    if offset < 0 or limit < 0 or offset + limit > size:
        raise ValueError(f"Enumeration range [{offset}, {offset + limit}) outside space of size {size}")
    return space.indices_at(np.arange(offset, offset + limit, dtype=np.int64))


def iter_index_chunks(space: SpaceDef, chunk_size: int) -> Iterable[np.ndarray]:
    """Walk the whole space in enumeration order, chunk by chunk."""
    size = space_size(space)
    for start in range(0, size, chunk_size):
        yield enumerate_indices(space, start, min(chunk_size, size - start))


# Architecture text codec: enc:[op,...];dec:[op,...]

_ARCH_PATTERN = re.compile(r"^enc:\[(?P<enc>[^\]]*)\];dec:\[(?P<dec>[^\]]*)\]$")


def format_arch(arch: Architecture) -> str:
    """Render an architecture in the compact codec form."""
    enc = ",".join(op.token for op in arch.encoder_ops)
    dec = ",".join(op.token for op in arch.decoder_ops)
    return f"enc:[{enc}];dec:[{dec}]"


def parse_arch(text: str, space: Optional[SpaceDef] = None, check_slots: bool = True) -> Architecture:
    """
    Parse codec text into an architecture valid in `space` (default space if None).

    With check_slots=False any number of slots per side is accepted; model
    configs use this for hand-designed stacks deeper than the search space.

    Raises:
        ArchitectureParseError: Naming the offending token and its position
    """
    space = space or DEFAULT_SPACE
    text = text.strip()
    match = _ARCH_PATTERN.match(text)
    if match is None:
        raise ArchitectureParseError(
            f"Malformed architecture '{text}': expected enc:[op,...];dec:[op,...]", position=0
        )

    sides = []
    for side, expected in (("enc", space.encoder_slots), ("dec", space.decoder_slots)):
        body = match.group(side)
        start = match.start(side)
        tokens = body.split(",") if body else []
        if check_slots and len(tokens) != expected:
            raise ArchitectureParseError(
                f"'{side}' lists {len(tokens)} operations, expected {expected} (at char {start})",
                token=body,
                position=start,
            )
        ops = []
        offset = start
        for slot, token in enumerate(tokens):
            try:
                op = OpCode.from_token(token)
                space.op_index(op)
            except OpCodeError:
                raise ArchitectureParseError(
                    f"Unknown operation token '{token}' at {side}[{slot}] (char {offset})",
                    token=token,
                    position=offset,
                ) from None
            ops.append(op)
            offset += len(token) + 1
        sides.append(tuple(ops))

    return Architecture(sides[0], sides[1])


# The architecture reported as discovered on LJSpeech
DISCOVERED_ARCH_TEXT = "enc:[sep5,sep25,sep13,sep9];dec:[sep17,sep21,sep9,sep13]"
