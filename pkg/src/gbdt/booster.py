"""
Gradient-boosted regression trees for architecture loss prediction.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.searchspace import Architecture, SpaceDef

from .tree import RegressionTree, fit_tree

logger = logging.getLogger(__name__)

FEATURE_ENCODINGS = ("onehot", "ordinal")


@dataclass(frozen=True)
class GbdtConfig:
    """Boosting hyperparameters; defaults are 100 trees of up to 31 leaves."""
    n_trees: int = 100
    max_leaves: int = 31
    learning_rate: float = 0.1
    min_samples_leaf: int = 2
    feature_encoding: str = "onehot"

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_leaves < 2:
            raise ValueError(f"max_leaves must be >= 2, got {self.max_leaves}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.feature_encoding not in FEATURE_ENCODINGS:
            raise ValueError(f"feature_encoding must be one of {FEATURE_ENCODINGS}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class GbdtModel:
    """base_prediction + learning_rate * sum of tree outputs."""
    base_prediction: float
    learning_rate: float
    feature_count: int
    trees: List[RegressionTree] = field(default_factory=list)
    feature_encoding: str = "onehot"
    train_loss_history: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": 1,
            "base_prediction": self.base_prediction,
            "learning_rate": self.learning_rate,
            "feature_count": self.feature_count,
            "feature_encoding": self.feature_encoding,
            "train_loss_history": list(self.train_loss_history),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GbdtModel":
        return cls(
            base_prediction=float(data["base_prediction"]),
            learning_rate=float(data["learning_rate"]),
            feature_count=int(data["feature_count"]),
            trees=[RegressionTree.from_dict(t) for t in data["trees"]],
            feature_encoding=data.get("feature_encoding", "onehot"),
            train_loss_history=[float(v) for v in data.get("train_loss_history", [])],
        )


def _as_matrix(features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"Features must be a 2-D matrix, got shape {X.shape}")
    return X


def fit(features: np.ndarray, targets: Sequence[float], config: GbdtConfig = GbdtConfig()) -> GbdtModel:
    """
    Least-squares boosting: each tree fits the residuals of the ensemble so far.

    Args:
        features: (n, p) matrix
        targets: n target values
        config: Boosting hyperparameters

    Returns:
        Fitted model; train_loss_history[i] is the training MSE after i trees

    Raises:
        ValueError: If n < 2, shapes disagree or any value is non-finite
    """
    X = _as_matrix(features)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise ValueError(f"Got {X.shape[0]} feature rows but targets of shape {y.shape}")
    if X.shape[0] < 2:
        raise ValueError(f"Need at least 2 training rows, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("Features and targets must be finite")

    base = float(y[0]) if np.all(y == y[0]) else float(y.mean())
    model = GbdtModel(base_prediction=base, learning_rate=config.learning_rate,
                      feature_count=X.shape[1], feature_encoding=config.feature_encoding)
    pred = np.full_like(y, base)
    model.train_loss_history.append(float(np.mean((y - pred) ** 2)))

    for round_index in range(config.n_trees):
        tree = fit_tree(X, y - pred, config.max_leaves, config.min_samples_leaf)
        model.trees.append(tree)
        pred = pred + config.learning_rate * tree.predict(X)
        mse = float(np.mean((y - pred) ** 2))
        if mse > model.train_loss_history[-1] * (1 + 1e-9) + 1e-15:
            logger.warning(f"Training MSE rose at round {round_index + 1}: "
                           f"{model.train_loss_history[-1]:.6g} -> {mse:.6g}")
        model.train_loss_history.append(mse)
        if tree.n_leaves == 1 and mse == model.train_loss_history[-2]:
            logger.debug(f"No admissible split at round {round_index + 1}")

    logger.info(f"GBDT fit on {X.shape[0]}x{X.shape[1]}: MSE {model.train_loss_history[0]:.5g} "
                f"-> {model.train_loss_history[-1]:.5g} over {len(model.trees)} trees")
    return model


def predict(model: GbdtModel, features: np.ndarray) -> np.ndarray:
    """
    Predictions for every row of `features`, in row order.

    Raises:
        ValueError: If the column count differs from the training features
    """
    X = _as_matrix(features)
    if X.shape[1] != model.feature_count:
        raise ValueError(f"Model expects {model.feature_count} features, got {X.shape[1]}")
    out = np.full(X.shape[0], model.base_prediction)
    if not model.trees:
        return out
    total = np.zeros(X.shape[0])
    for tree in model.trees:
        total += tree.predict(X)
    return out + model.learning_rate * total


def encode_features(space: SpaceDef, rows: np.ndarray, encoding: str = "onehot") -> np.ndarray:
    """Feature matrix for index rows under the chosen encoding."""
    if encoding == "ordinal":
        return space.ordinal_indices(rows)
    return space.onehot_indices(rows)


def rank_indices(model: GbdtModel, space: SpaceDef, rows: np.ndarray, k: int,
                 ranks: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Top-k index rows by ascending predicted loss.

    Ties break by `ranks` (default: position in `rows`).

    Returns:
        (rows of the k best, their predictions)
    """
    preds = predict(model, encode_features(space, rows, model.feature_encoding))
    tie = np.arange(len(preds)) if ranks is None else np.asarray(ranks)
    order = np.lexsort((tie, preds))[:k]
    return np.asarray(rows)[order], preds[order]


def rank_candidates(model: GbdtModel, archs: Sequence[Architecture], space: SpaceDef,
                    k: int) -> List[Tuple[Architecture, float]]:
    """
    The k architectures with the lowest predicted loss, with their predictions.

    Equal predictions keep input order.

    Raises:
        ValueError: If k exceeds the number of candidates
    """
    if k > len(archs):
        raise ValueError(f"Cannot take top {k} of {len(archs)} candidates")
    rows = space.to_indices(list(archs))
    preds = predict(model, encode_features(space, rows, model.feature_encoding))
    order = np.argsort(preds, kind="stable")[:k]
    return [(archs[i], float(preds[i])) for i in order]


def save_model(model: GbdtModel, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_dict(), indent=1), encoding="utf-8")
    logger.info(f"Saved GBDT with {len(model.trees)} trees to {path}")


def load_model(path: Union[str, Path]) -> GbdtModel:
    return GbdtModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
