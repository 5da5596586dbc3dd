"""
Single-path supernet training with plain SGD.
"""

import logging
from typing import Dict

import numpy as np

from src.searchspace import Architecture

from .dataset import SynthDataset
from .model import SupernetState, sample_loss

logger = logging.getLogger(__name__)

CLIP_NORM = 5.0


class SupernetTrainingError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""

    def __init__(self, step: int, arch: Architecture, loss: float):
        super().__init__(f"Non-finite loss {loss} at step {step} for {arch}")
        self.step = step
        self.arch = arch
        self.loss = loss


def clip_gradients(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Scale grads in place so their global L2 norm is at most max_norm; returns the norm before clipping."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def train_supernet(state: SupernetState, dataset: SynthDataset, steps: int, batch: int = 8,
                   lr: float = 0.05, seed: int = 0, clip_norm: float = CLIP_NORM,
                   log_every: int = 200) -> SupernetState:
    """
    Train the supernet in place, one uniformly sampled architecture per step.

    Only the sampled blocks and the shared trunk receive updates. The random
    stream is keyed by (seed, step) so resumed training continues the same
    sequence.

    Args:
        state: Supernet to update
        dataset: Training data (the train split is used)
        steps: Number of SGD steps (>= 1)
        batch: Samples per step
        lr: Learning rate; 0 leaves every weight bitwise unchanged
        seed: Sampling seed
        clip_norm: Global gradient norm limit

    Returns:
        The same state with `step` advanced by `steps`

    Raises:
        SupernetTrainingError: On a non-finite batch loss
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    space = state.space
    n_train = len(dataset.train)
    batch = min(batch, n_train)
    logger.info(f"Training supernet for {steps} steps (batch {batch}, lr {lr}, seed {seed})")

    for _ in range(steps):
        rng = np.random.default_rng([seed, state.step])
        arch = space.from_indices(space.sample_indices(rng, 1))[0]
        picks = rng.choice(n_train, size=batch, replace=False)

        params = state.parameters(arch)
        grads = {path: np.zeros_like(w) for path, w in params.items()}
        total = 0.0
        for idx in picks:
            loss, dy, cache = sample_loss(state, arch, dataset.train[idx])
            total += loss
            for path, g in state.backward(arch, dy / batch, cache).items():
                grads[path] += g
        loss = total / batch
        if not np.isfinite(loss):
            raise SupernetTrainingError(state.step, arch, loss)

        norm = clip_gradients(grads, clip_norm)
        if lr != 0.0:
            for path, w in params.items():
                w -= lr * grads[path]

        state.train_losses.append(loss)
        state.step += 1
        if log_every and state.step % log_every == 0:
            recent = float(np.mean(state.train_losses[-log_every:]))
            logger.info(f"step {state.step}: mean train loss {recent:.5f}")
        else:
            logger.debug(f"step {state.step}: {arch} loss {loss:.5f} grad norm {norm:.3f}")
    return state
