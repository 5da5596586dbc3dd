"""
Validation-loss oracle over a trained supernet, plus the JSON-lines eval log.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from src.searchspace import Architecture, SpaceDef, format_arch, parse_arch

from .model import Sample, SupernetState

logger = logging.getLogger(__name__)


class EvalLogCorruptError(ValueError):
    """Raised when an eval log or loss table line cannot be parsed."""

    def __init__(self, path: Union[str, Path], line: int, reason: str):
        super().__init__(f"{path}: line {line}: {reason}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class EvalRecord:
    """An architecture and its mean squared error on the dev split."""
    arch: Architecture
    val_loss: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.val_loss) or self.val_loss < 0:
            raise ValueError(f"val_loss must be finite and non-negative, got {self.val_loss}")

    def to_dict(self) -> Dict[str, Any]:
        return {"arch": format_arch(self.arch), "val_loss": float(self.val_loss), "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], space: Optional[SpaceDef] = None) -> "EvalRecord":
        return cls(arch=parse_arch(str(data["arch"]), space), val_loss=float(data["val_loss"]),
                   seed=int(data.get("seed", 0)))


def evaluate_model(model: SupernetState, arch: Architecture, samples: Sequence[Sample]) -> float:
    """Mean squared error of `arch` routed through `model` over `samples`; reads weights only."""
    if not samples:
        raise ValueError("Cannot evaluate on an empty sample list")
    losses = [float(np.mean((model.forward(arch, s) - s.target) ** 2)) for s in samples]
    return float(np.mean(losses))


def evaluate_arch(state: SupernetState, arch: Architecture, dev: Sequence[Sample]) -> EvalRecord:
    """Dev-split loss of `arch` using its supernet weights."""
    state.space.validate(arch)
    return EvalRecord(arch=arch, val_loss=evaluate_model(state, arch, dev), seed=state.seed)


def evaluate_batch(state: SupernetState, archs: Sequence[Architecture], dev: Sequence[Sample],
                   workers: int = 1) -> List[EvalRecord]:
    """
    evaluate_arch over many architectures, in input order.

    With workers > 1 evaluations fan out over threads; the state is only read.
    """
    if workers <= 1 or len(archs) <= 1:
        return [evaluate_arch(state, arch, dev) for arch in archs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: evaluate_arch(state, a, dev), archs))


class EvalLog:
    """
    Append-only JSON-lines record of completed evaluations.

    One line per record: {"arch": "<codec>", "val_loss": <float>, "seed": <int>},
    plus "fingerprint" when the log is bound to an oracle configuration.
    A bound log only restores lines carrying its own fingerprint, so runs
    with another seed or supernet setup can share the file without mixing.
    """

    def __init__(self, path: Union[str, Path], space: Optional[SpaceDef] = None,
                 fingerprint: Optional[str] = None):
        self.path = Path(path)
        self.space = space
        self.fingerprint = fingerprint

    def load(self) -> Dict[str, EvalRecord]:
        """
        Records already in the log, keyed by codec string (later lines win).

        Raises:
            EvalLogCorruptError: Naming the first unreadable line
        """
        records: Dict[str, EvalRecord] = {}
        if not self.path.exists():
            return records
        skipped = 0
        with open(self.path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                    record = EvalRecord.from_dict(data, self.space)
                except (ValueError, KeyError, TypeError) as e:
                    raise EvalLogCorruptError(self.path, number, str(e)) from e
                if self.fingerprint is not None and data.get("fingerprint") != self.fingerprint:
                    skipped += 1
                    continue
                records[format_arch(record.arch)] = record
        if skipped:
            logger.warning(f"Ignoring {skipped} evaluations in {self.path} made under another configuration")
        logger.info(f"Resuming from {self.path}: {len(records)} completed evaluations")
        return records

    def append(self, records: Iterable[EvalRecord]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            for record in records:
                data = record.to_dict()
                if self.fingerprint is not None:
                    data["fingerprint"] = self.fingerprint
                f.write(json.dumps(data, sort_keys=True) + "\n")


def load_eval_table(path: Union[str, Path], space: Optional[SpaceDef] = None) -> List[EvalRecord]:
    """
    Read externally produced (architecture, loss) pairs.

    Accepts JSON-lines records, or a JSON array whose items are either
    {"arch": ..., "val_loss": ...} objects or [arch, loss] pairs.

    Raises:
        EvalLogCorruptError: Naming the offending line (JSON-lines) or item index (array)
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        return list(EvalLog(path, space).load().values())

    try:
        items = json.loads(text)
    except json.JSONDecodeError as e:
        raise EvalLogCorruptError(path, e.lineno, e.msg) from e
    records = []
    for index, item in enumerate(items):
        try:
            if isinstance(item, (list, tuple)):
                arch_text, loss = item
                item = {"arch": arch_text, "val_loss": loss}
            records.append(EvalRecord.from_dict(item, space))
        except (ValueError, KeyError, TypeError) as e:
            raise EvalLogCorruptError(path, index + 1, str(e)) from e
    logger.info(f"Loaded {len(records)} external evaluations from {path}")
    return records
