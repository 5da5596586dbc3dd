"""From-scratch gradient-boosted regression trees."""

from .tree import RegressionTree, best_split, fit_tree
from .booster import (
    FEATURE_ENCODINGS,
    GbdtConfig,
    GbdtModel,
    encode_features,
    fit,
    load_model,
    predict,
    rank_candidates,
    rank_indices,
    save_model,
)

__all__ = [
    'RegressionTree', 'best_split', 'fit_tree', 'FEATURE_ENCODINGS', 'GbdtConfig',
    'GbdtModel', 'encode_features', 'fit', 'load_model', 'predict', 'rank_candidates',
    'rank_indices', 'save_model',
]
