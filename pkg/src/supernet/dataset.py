"""
Synthetic planted-teacher sequence task.

A teacher network with a fixed architecture and frozen random weights maps
token sequences to frame-level targets; the supernet must recover which
operations reproduce it.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.searchspace import Architecture, SpaceDef

from .model import Sample, SupernetState, ToyDims, build_supernet

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (256, 64)
# Teacher block weights are scaled so the searched operations, not the shared
# embedding path, dominate the targets
TEACHER_GAIN = 2.5


@dataclass
class SynthDataset:
    """Train/dev splits generated by a frozen teacher."""
    train: List[Sample]
    dev: List[Sample]
    teacher_arch: Architecture
    teacher: SupernetState
    noise_sigma: float
    seed: int
    dims: ToyDims


def _draw_inputs(rng: np.random.Generator, dims: ToyDims, count: int, seen: set) -> List[Tuple[np.ndarray, np.ndarray]]:
    inputs = []
    while len(inputs) < count:
        tokens = rng.integers(0, dims.vocab, size=dims.length)
        key = tokens.tobytes()
        if key in seen:
            continue
        seen.add(key)
        durations = rng.integers(1, dims.max_duration + 1, size=dims.length)
        inputs.append((tokens, durations))
    return inputs


def make_synth_dataset(space: SpaceDef, dims: ToyDims, teacher_arch: Architecture, seed: int,
                       sizes: Tuple[int, int] = DEFAULT_SIZES, noise_sigma: float = 0.01,
                       teacher_gain: float = TEACHER_GAIN) -> SynthDataset:
    """
    Generate a dataset whose targets are the teacher's output plus Gaussian noise.

    Token sequences are never shared between the two splits.

    Args:
        space: Space the teacher architecture belongs to
        dims: Toy model dimensions
        teacher_arch: Architecture of the planted teacher
        seed: Seed for teacher weights, inputs and noise
        sizes: (train, dev) sample counts
        noise_sigma: Standard deviation of the target noise
        teacher_gain: Multiplier on the teacher's block weights

    Raises:
        ValueError: If teacher_arch is not in the space or sizes/noise are invalid
    """
    space.validate(teacher_arch)
    n_train, n_dev = sizes
    if n_train < 1 or n_dev < 1:
        raise ValueError(f"Split sizes must be positive, got {sizes}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be non-negative, got {noise_sigma}")

    teacher = build_supernet(space, dims, seed=seed + 7919, gain=teacher_gain)
    rng = np.random.default_rng([seed, 1])
    seen: set = set()
    splits = []
    for count in (n_train, n_dev):
        samples = []
        for tokens, durations in _draw_inputs(rng, dims, count, seen):
            clean = teacher.forward(teacher_arch, Sample(tokens, durations, np.empty(0)))
            noisy = clean + rng.normal(0.0, noise_sigma, size=clean.shape) if noise_sigma > 0 else clean
            samples.append(Sample(tokens=tokens, durations=durations, target=noisy))
        splits.append(samples)

    logger.info(f"Synthetic dataset: {n_train} train / {n_dev} dev samples, "
                f"teacher {teacher_arch}, sigma={noise_sigma}")
    return SynthDataset(train=splits[0], dev=splits[1], teacher_arch=teacher_arch, teacher=teacher,
                        noise_sigma=noise_sigma, seed=seed, dims=dims)
