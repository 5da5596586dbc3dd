"""
Wall-clock profiling of an instantiated model.
"""

import logging
import time
from typing import Dict, List

import numpy as np
from threadpoolctl import threadpool_limits

from .config import MacsQuery, ModelConfig
from .instantiate import build_model
from .report import ComponentCost, CostBreakdown

logger = logging.getLogger(__name__)

MIN_REPETITIONS = 3


def profile(config: ModelConfig, q: MacsQuery, repetitions: int = 5,
            warmup_runs: int = 1, seed: int = 0) -> CostBreakdown:
    """
    Median per-component latency of the forward pass, as real-time factor.

    RTF = median seconds / (output_length * hop / sample_rate). Runs in the
    calling thread with every native thread pool (BLAS, OpenMP) limited to one
    thread for the warmup and timed passes.

    Args:
        config: Model to instantiate
        q: Sequence lengths and audio framing
        repetitions: Timed forward passes (at least 3)
        warmup_runs: Untimed passes before measurement
        seed: Weight and token seed

    Returns:
        CostBreakdown with the rtf column filled

    Raises:
        ValueError: If repetitions < 3
    """
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"profile needs at least {MIN_REPETITIONS} repetitions, got {repetitions}")

    model = build_model(config, seed=seed)
    tokens = model.sample_tokens(q.input_length, seed)

    logger.info(f"Profiling {config.name}: {warmup_runs} warmup + {repetitions} timed runs")
    samples: Dict[str, List[float]] = {name: [] for name in model.component_params()}
    wall: List[float] = []
    with threadpool_limits(limits=1):
        for _ in range(warmup_runs):
            model.forward(tokens, q.output_length)
        for _ in range(repetitions):
            start = time.perf_counter()
            model.forward(tokens, q.output_length)
            wall.append(time.perf_counter() - start)
            for name in samples:
                samples[name].append(model.timings.get(name, 0.0))

    audio = q.audio_seconds
    rows = [
        ComponentCost(name=name, rtf=float(np.median(times)) / audio, auxiliary=name.endswith("Embedding"))
        for name, times in samples.items()
    ]
    logger.info(f"{config.name}: median forward {np.median(wall):.4f}s for {audio:.3f}s of audio "
                f"(RTF {np.median(wall) / audio:.2e})")
    return CostBreakdown(model=config.name, components=rows, query=q, repetitions=repetitions)
