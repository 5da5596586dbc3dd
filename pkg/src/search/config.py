"""
Search configuration.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

from src.gbdt import GbdtConfig
from src.searchspace import DEFAULT_SPACE, SpaceDef, space_size
from src.supernet import TEACHER_GAIN, ToyDims

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionPool:
    """Candidates the GBDT ranks: the whole space ("full") or `size` fresh uniform samples ("sampled")."""
    mode: str = "sampled"
    size: int = 1_000_000

    def __post_init__(self):
        if self.mode not in ("full", "sampled"):
            raise ValueError(f"Pool mode must be 'full' or 'sampled', got '{self.mode}'")
        if self.mode == "sampled" and self.size < 1:
            raise ValueError(f"Sampled pool size must be positive, got {self.size}")

    @classmethod
    def full(cls) -> "PredictionPool":
        return cls(mode="full", size=0)

    @classmethod
    def sampled(cls, size: int) -> "PredictionPool":
        return cls(mode="sampled", size=size)

    def capacity(self, space: SpaceDef) -> int:
        """Upper bound on distinct candidates the pool can hold."""
        total = space_size(space)
        return total if self.mode == "full" else min(self.size, total)

    def to_dict(self) -> Dict[str, Any]:
        return {"mode": self.mode, "size": self.size}


@dataclass(frozen=True)
class SearchConfig:
    """
    End-to-end search settings. Defaults follow the reference budget of
    1000 labeled architectures and 300 re-evaluations, with a scaled-down
    supernet schedule.
    """
    space: SpaceDef = DEFAULT_SPACE
    dims: ToyDims = field(default_factory=ToyDims)
    train_steps: int = 2000
    batch: int = 8
    lr: float = 0.05
    n_initial: int = 1000
    pool: PredictionPool = field(default_factory=PredictionPool)
    top_k: int = 300
    gbdt: GbdtConfig = field(default_factory=GbdtConfig)
    seed: int = 0
    noise_sigma: float = 0.01
    dataset_sizes: Tuple[int, int] = (256, 64)
    teacher_arch: Optional[str] = None
    prediction_chunk: int = 65536

    def validate(self) -> None:
        """
        Raises:
            ValueError: If budgets are inconsistent with the space or pool
        """
        if self.train_steps < 0:
            raise ValueError(f"train_steps must be >= 0, got {self.train_steps}")
        if self.n_initial < 2:
            raise ValueError(f"n_initial must be >= 2 to fit the predictor, got {self.n_initial}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        capacity = self.pool.capacity(self.space)
        if self.top_k > capacity:
            raise ValueError(f"top_k {self.top_k} exceeds the prediction pool of {capacity}")
        if self.prediction_chunk < 1:
            raise ValueError("prediction_chunk must be positive")

    def with_seed(self, seed: int) -> "SearchConfig":
        return replace(self, seed=seed)

    def fingerprint(self) -> str:
        """
        sha256 over every setting that shapes the supernet oracle: space,
        dims, training schedule, seed and synthetic task. Predictor and pool
        settings are left out, so they can change without invalidating
        saved evaluations or checkpoints.
        """
        oracle = {
            "space": self.space.to_dict(),
            "dims": self.dims.to_dict(),
            "train_steps": self.train_steps,
            "batch": self.batch,
            "lr": self.lr,
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "dataset_sizes": list(self.dataset_sizes),
            "teacher_arch": self.teacher_arch,
            "teacher_gain": TEACHER_GAIN,
        }
        return hashlib.sha256(json.dumps(oracle, sort_keys=True).encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": 1,
            "space": self.space.to_dict(),
            "dims": self.dims.to_dict(),
            "train_steps": self.train_steps,
            "batch": self.batch,
            "lr": self.lr,
            "n_initial": self.n_initial,
            "pool": self.pool.to_dict(),
            "top_k": self.top_k,
            "gbdt": self.gbdt.to_dict(),
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "dataset_sizes": list(self.dataset_sizes),
            "teacher_arch": self.teacher_arch,
            "prediction_chunk": self.prediction_chunk,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SearchConfig":
        kwargs = {k: v for k, v in data.items() if k != "version"}
        if "space" in kwargs:
            kwargs["space"] = SpaceDef.from_dict(kwargs["space"])
        if "dims" in kwargs:
            kwargs["dims"] = ToyDims.from_dict(kwargs["dims"])
        if "pool" in kwargs:
            kwargs["pool"] = PredictionPool(**kwargs["pool"])
        if "gbdt" in kwargs:
            kwargs["gbdt"] = GbdtConfig(**kwargs["gbdt"])
        if "dataset_sizes" in kwargs:
            kwargs["dataset_sizes"] = tuple(kwargs["dataset_sizes"])
        config = cls(**kwargs)
        config.validate()
        return config
