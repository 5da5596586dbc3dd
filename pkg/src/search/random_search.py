"""
Random-search baseline: evaluate uniformly drawn architectures and keep the best.
"""

import logging
from typing import Optional

import numpy as np

from src.supernet import EvalLog, SupernetState, SynthDataset, evaluate_batch

from .config import SearchConfig
from .orchestrator import _RANDOM_STREAM, EvalCache, _phase, train_for_search
from .report import SearchReport

logger = logging.getLogger(__name__)


def run_random_search(config: SearchConfig, dataset: SynthDataset, n: int,
                      state: Optional[SupernetState] = None, eval_log: Optional[EvalLog] = None,
                      workers: int = 1) -> SearchReport:
    """
    Evaluate n i.i.d. uniform architectures on the supernet.

    Args:
        config: Supplies space, supernet schedule and seed
        dataset: Synthetic task
        n: Number of architectures to draw (duplicates are evaluated once)
        state: Already trained supernet; trained from scratch when None

    Returns:
        Report with the best and the mean validation loss over the n draws

    Raises:
        ValueError: If n < 1
    """
    if n < 1:
        raise ValueError(f"Random search needs n >= 1, got {n}")
    timings = {}
    with _phase("train", timings):
        if state is None:
            state = train_for_search(config, dataset)

    with _phase("sample", timings):
        rng = np.random.default_rng([config.seed, _RANDOM_STREAM])
        archs = config.space.from_indices(config.space.sample_indices(rng, n))
        cache = EvalCache(lambda batch: evaluate_batch(state, batch, dataset.dev, workers=workers), eval_log)
        records = cache.evaluate(archs)

    losses = np.array([r.val_loss for r in records])
    best = records[int(np.argmin(losses))]
    logger.info(f"Random search over {n} architectures: best {best.val_loss:.6f}, mean {losses.mean():.6f}")
    return SearchReport(
        method="random",
        best_arch=best.arch,
        best_val_loss=best.val_loss,
        initial_records=records,
        reevaluated_records=[],
        budget={"planned_evals": n, "supernet_evals": cache.unique, "reused_evals": cache.reused,
                "gbdt_predictions": 0},
        seed=config.seed,
        mean_val_loss=float(losses.mean()),
        timings=timings,
    )
