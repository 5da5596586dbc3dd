"""Predictor-guided architecture search and its baselines."""

from .config import PredictionPool, SearchConfig
from .report import SearchReport, render_search_report
from .orchestrator import (
    EvalCache,
    GbdtNasOrchestrator,
    SearchPhaseError,
    build_dataset,
    rank_pool,
    run_gbdt_nas,
    run_gbdt_nas_from_table,
    sample_unique_indices,
    train_for_search,
)
from .random_search import run_random_search
from .baselines import BaselineComparison, compare_search_space, evaluate_named_baselines, manual_genotype

__all__ = [
    'PredictionPool', 'SearchConfig', 'SearchReport', 'render_search_report', 'EvalCache',
    'GbdtNasOrchestrator', 'SearchPhaseError', 'build_dataset', 'rank_pool', 'run_gbdt_nas',
    'run_gbdt_nas_from_table', 'sample_unique_indices', 'train_for_search', 'run_random_search',
    'BaselineComparison', 'compare_search_space', 'evaluate_named_baselines', 'manual_genotype',
]
