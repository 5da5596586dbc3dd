"""
Named model comparisons: cost of the canned configs and the search-space
effectiveness table on the synthetic objective.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.costmodel import (
    CostBreakdown,
    MacsQuery,
    cost_report,
    fastspeech2_config,
    fastspeech2_small_config,
    lightspeech_config,
    predictor_savings,
    render_comparison,
)
from src.searchspace import Architecture, OpCode, OpKind, format_arch
from src.supernet import SupernetState, SynthDataset, evaluate_arch

from .config import SearchConfig
from .orchestrator import run_gbdt_nas, train_for_search
from .random_search import run_random_search

logger = logging.getLogger(__name__)


@dataclass
class BaselineComparison:
    """Cost breakdowns of the three named models plus SepConv predictor savings."""
    rows: List[CostBreakdown]
    predictor_savings: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def row(self, model: str) -> CostBreakdown:
        for breakdown in self.rows:
            if breakdown.model == model:
                return breakdown
        raise KeyError(model)

    def to_dict(self) -> Dict[str, Any]:
        return {"version": 1, "models": [b.to_dict() for b in self.rows],
                "predictor_savings": self.predictor_savings}

    def render(self) -> str:
        lines = [render_comparison(self.rows), "", "Variance predictor parameters (vanilla -> SepConv):"]
        for name, counts in self.predictor_savings.items():
            saved = counts["vanilla"] - counts["sepconv"]
            lines.append(f"  {name}: {counts['vanilla'] / 1e6:.2f}M -> {counts['sepconv'] / 1e6:.2f}M "
                         f"(saves {saved / 1e6:.2f}M)")
        return "\n".join(lines)


def evaluate_named_baselines(query: Optional[MacsQuery] = None, repetitions: int = 0,
                             seed: int = 0) -> BaselineComparison:
    """
    Params, MACs and (when repetitions > 0) RTF of the full-size baseline,
    its shrunk variant and the discovered lightweight model.
    """
    query = query or MacsQuery()
    rows = [cost_report(cfg, query, repetitions=repetitions, seed=seed)
            for cfg in (fastspeech2_config(), fastspeech2_small_config(), lightspeech_config())]
    for b in rows:
        logger.info(f"{b.model}: {b.totals['params']} params, {b.totals['macs']} MACs")
    return BaselineComparison(rows=rows, predictor_savings=predictor_savings(fastspeech2_config()))


def manual_genotype(config: SearchConfig) -> Optional[Architecture]:
    """Hand-designed alternation of attention and feed-forward slots, if the space holds both."""
    vocab = config.space.vocabulary
    attention = next((op for op in vocab if op.kind == OpKind.MHSA), None)
    ffn = OpCode(OpKind.FFN)
    if attention is None or ffn not in vocab:
        return None

    def side(slots: int):
        return tuple(attention if i % 2 == 0 else ffn for i in range(slots))

    return Architecture(side(config.space.encoder_slots), side(config.space.decoder_slots))


def compare_search_space(config: SearchConfig, dataset: SynthDataset,
                         state: Optional[SupernetState] = None, n_random: int = 10,
                         workers: int = 1) -> List[Dict[str, Any]]:
    """
    Validation losses of a manual genotype, the mean of n_random random
    architectures and the GBDT search winner, all on one trained supernet.
    """
    if state is None:
        state = train_for_search(config, dataset)
    rows = []
    manual = manual_genotype(config)
    if manual is not None:
        rows.append({"name": "manual", "arch": format_arch(manual),
                     "val_loss": evaluate_arch(state, manual, dataset.dev).val_loss})
    random_report = run_random_search(config, dataset, n_random, state=state, workers=workers)
    rows.append({"name": f"random (mean of {n_random})", "arch": None,
                 "val_loss": float(np.mean([r.val_loss for r in random_report.initial_records]))})
    nas = run_gbdt_nas(config, dataset, state=state, workers=workers)
    rows.append({"name": "gbdt search", "arch": format_arch(nas.best_arch), "val_loss": nas.best_val_loss})
    return rows
