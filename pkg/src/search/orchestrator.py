"""
GBDT-guided architecture search over a weight-sharing supernet.

Phases: train the supernet, label a uniform sample of architectures, fit the
loss predictor, rank the prediction pool, re-evaluate the top candidates and
return the best re-evaluated architecture.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.gbdt import GbdtModel, encode_features, fit, rank_indices
from src.searchspace import Architecture, SpaceDef, format_arch, iter_index_chunks, parse_arch, space_size
from src.supernet import (
    EvalLog,
    EvalRecord,
    SupernetState,
    SynthDataset,
    build_supernet,
    evaluate_batch,
    make_synth_dataset,
    train_supernet,
)

from .config import SearchConfig
from .report import SearchReport

logger = logging.getLogger(__name__)

Oracle = Callable[[Sequence[Architecture]], List[EvalRecord]]

# Stream offsets so each phase draws from its own generator
_TEACHER_STREAM, _SAMPLE_STREAM, _POOL_STREAM, _RANDOM_STREAM = 0, 2, 4, 5


class SearchPhaseError(RuntimeError):
    """Wraps a failure inside a search phase; the original error is chained."""

    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"Search failed in phase '{phase}': {cause}")
        self.phase = phase


class EvalCache:
    """
    Memoizes oracle calls by genotype and streams fresh records to an EvalLog.

    `unique` counts distinct architectures evaluated in this run (whether
    computed now or restored from the log), `reused` counts requests answered
    from architectures already evaluated earlier in the same run.
    """

    def __init__(self, oracle: Oracle, log: Optional[EvalLog] = None):
        self.oracle = oracle
        self.log = log
        self.restored: Dict[str, EvalRecord] = log.load() if log is not None else {}
        self.records: Dict[str, EvalRecord] = {}
        self.reused = 0

    @property
    def unique(self) -> int:
        return len(self.records)

    def evaluate(self, archs: Sequence[Architecture]) -> List[EvalRecord]:
        keys = [format_arch(a) for a in archs]
        missing: List[Architecture] = []
        seen = set()
        for key, arch in zip(keys, archs):
            if key in self.records:
                self.reused += 1
            elif key in self.restored:
                self.records[key] = self.restored[key]
            elif key not in seen:
                seen.add(key)
                missing.append(arch)
        if missing:
            fresh = self.oracle(missing)
            for record in fresh:
                self.records[format_arch(record.arch)] = record
            if self.log is not None:
                self.log.append(fresh)
        return [self.records[k] for k in keys]


@contextmanager
def _phase(name: str, timings: Dict[str, float]):
    logger.info(f"Phase: {name}")
    start = time.perf_counter()
    try:
        yield
    except SearchPhaseError:
        raise
    except Exception as e:
        logger.error(f"Phase '{name}' failed: {e}")
        raise SearchPhaseError(name, e) from e
    finally:
        timings[name] = time.perf_counter() - start


def build_dataset(config: SearchConfig) -> SynthDataset:
    """Synthetic task for `config`; the teacher is drawn from the space unless fixed by config."""
    if config.teacher_arch:
        teacher = parse_arch(config.teacher_arch, config.space)
    else:
        rng = np.random.default_rng([config.seed, _TEACHER_STREAM])
        teacher = config.space.from_indices(config.space.sample_indices(rng, 1))[0]
    return make_synth_dataset(config.space, config.dims, teacher, seed=config.seed,
                              sizes=config.dataset_sizes, noise_sigma=config.noise_sigma)


def train_for_search(config: SearchConfig, dataset: SynthDataset) -> SupernetState:
    state = build_supernet(config.space, config.dims, seed=config.seed)
    if config.train_steps > 0:
        train_supernet(state, dataset, config.train_steps, batch=config.batch, lr=config.lr, seed=config.seed)
    return state


def sample_unique_indices(space: SpaceDef, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    n distinct index rows in first-drawn order, or the whole space in
    enumeration order when n covers it.
    """
    total = space_size(space)
    if n >= total:
        return space.indices_at(np.arange(total, dtype=np.int64))
    chosen: List[np.ndarray] = []
    seen = set()
    for _ in range(100):
        draw = space.sample_indices(rng, 2 * (n - len(chosen)))
        for row, rank in zip(draw, space.rank_of(draw)):
            if int(rank) not in seen:
                seen.add(int(rank))
                chosen.append(row)
                if len(chosen) == n:
                    return np.array(chosen)
    logger.warning(f"Could only draw {len(chosen)} distinct architectures of {n} requested")
    return np.array(chosen)


def _merge_top(best: Tuple[np.ndarray, np.ndarray, np.ndarray], rows: np.ndarray, preds: np.ndarray,
               ranks: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    all_rows = np.concatenate([best[0], rows])
    all_preds = np.concatenate([best[1], preds])
    all_ranks = np.concatenate([best[2], ranks])
    order = np.lexsort((all_ranks, all_preds))[:k]
    return all_rows[order], all_preds[order], all_ranks[order]


def rank_pool(model: GbdtModel, config: SearchConfig, workers: int = 1) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Predict over the configured pool and keep the top_k rows.

    Ties in predicted loss break by enumeration index.

    Returns:
        (top rows, their predictions, number of predictions made)
    """
    space, k = config.space, config.top_k
    if config.pool.mode == "full":
        chunks = iter_index_chunks(space, config.prediction_chunk)
    else:
        rng = np.random.default_rng([config.seed, _POOL_STREAM])
        ranks = np.unique(space.rank_of(space.sample_indices(rng, config.pool.size)))
        chunks = (space.indices_at(ranks[i:i + config.prediction_chunk])
                  for i in range(0, len(ranks), config.prediction_chunk))

    def score(rows: np.ndarray):
        ranks = space.rank_of(rows)
        top_rows, top_preds = rank_indices(model, space, rows, k, ranks=ranks)
        return top_rows, top_preds, space.rank_of(top_rows), len(rows)

    best = (np.empty((0, space.slots), dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64))
    predictions = 0
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(score, chunks))
    else:
        scored = (score(rows) for rows in chunks)
    for top_rows, top_preds, top_ranks, count in scored:
        best = _merge_top(best, top_rows, top_preds, top_ranks, k)
        predictions += count
    return best[0], best[1], predictions


class GbdtNasOrchestrator:
    """Runs the six search phases for one config and seed."""

    def __init__(self, config: SearchConfig, workers: int = 1, eval_log: Optional[EvalLog] = None):
        config.validate()
        self.config = config
        self.workers = workers
        self.eval_log = eval_log

    def run(self, dataset: SynthDataset, state: Optional[SupernetState] = None) -> SearchReport:
        """
        Execute the search.

        Args:
            dataset: Synthetic task (dev split is the evaluation set)
            state: Already trained supernet; trained from scratch when None

        Raises:
            SearchPhaseError: Tagged with the failing phase
        """
        cfg = self.config
        timings: Dict[str, float] = {}
        logger.info(f"Starting GBDT search (seed {cfg.seed}, n_initial {cfg.n_initial}, top_k {cfg.top_k})")

        with _phase("train", timings):
            if state is None:
                state = train_for_search(cfg, dataset)

        def oracle(archs: Sequence[Architecture]) -> List[EvalRecord]:
            return evaluate_batch(state, archs, dataset.dev, workers=self.workers)

        cache = EvalCache(oracle, self.eval_log)
        return self._search(cache, timings)

    def _search(self, cache: EvalCache, timings: Dict[str, float],
                pool_rows: Optional[np.ndarray] = None) -> SearchReport:
        cfg, space = self.config, self.config.space

        with _phase("sample", timings):
            if pool_rows is None:
                rows = sample_unique_indices(space, cfg.n_initial,
                                             np.random.default_rng([cfg.seed, _SAMPLE_STREAM]))
            else:
                rng = np.random.default_rng([cfg.seed, _SAMPLE_STREAM])
                picks = np.sort(rng.permutation(len(pool_rows))[:cfg.n_initial])
                rows = pool_rows[picks]
            initial = cache.evaluate(space.from_indices(rows))
            logger.info(f"Labeled {len(initial)} architectures; best {min(r.val_loss for r in initial):.6f}")

        with _phase("fit", timings):
            X = encode_features(space, rows, cfg.gbdt.feature_encoding)
            model = fit(X, [r.val_loss for r in initial], cfg.gbdt)

        with _phase("predict", timings):
            if pool_rows is None:
                top_rows, top_preds, predictions = rank_pool(model, cfg, self.workers)
            else:
                k = min(cfg.top_k, len(pool_rows))
                top_rows, top_preds = rank_indices(model, space, pool_rows, k, ranks=space.rank_of(pool_rows))
                predictions = len(pool_rows)
            logger.info(f"Ranked {predictions} candidates; best predicted loss {top_preds[0]:.6f}")

        with _phase("reevaluate", timings):
            reused_before = cache.reused
            reevaluated = cache.evaluate(space.from_indices(top_rows))
            reused = cache.reused - reused_before

        with _phase("select", timings):
            losses = np.array([r.val_loss for r in reevaluated])
            best = reevaluated[int(np.argmin(losses))]

        budget = {
            "planned_evals": cfg.n_initial + cfg.top_k,
            "supernet_evals": cache.unique,
            "reused_evals": reused,
            "gbdt_predictions": int(predictions),
        }
        logger.info(f"Best architecture {format_arch(best.arch)} with loss {best.val_loss:.6f} "
                    f"({cache.unique} unique evaluations)")
        return SearchReport(method="gbdt", best_arch=best.arch, best_val_loss=best.val_loss,
                            initial_records=initial, reevaluated_records=reevaluated, budget=budget,
                            seed=cfg.seed, predicted=[float(p) for p in top_preds], timings=timings)


def run_gbdt_nas(config: SearchConfig, dataset: SynthDataset, state: Optional[SupernetState] = None,
                 eval_log: Optional[EvalLog] = None, workers: int = 1) -> SearchReport:
    """Convenience wrapper around GbdtNasOrchestrator.run."""
    return GbdtNasOrchestrator(config, workers=workers, eval_log=eval_log).run(dataset, state)


def run_gbdt_nas_from_table(config: SearchConfig, records: Sequence[EvalRecord]) -> SearchReport:
    """
    Predictor phases against a fixed table of (architecture, loss) pairs.

    The table is both the labeling oracle and the prediction pool: n_initial
    entries train the GBDT, the rest are ranked, and the top_k are looked up.

    Raises:
        ValueError: If the table is smaller than n_initial
    """
    table = {format_arch(r.arch): r for r in records}
    if len(table) < config.n_initial:
        raise ValueError(f"Table holds {len(table)} architectures, n_initial is {config.n_initial}")
    space = config.space
    archs = [r.arch for r in table.values()]
    pool_rows = space.to_indices(archs)
    order = np.argsort(space.rank_of(pool_rows), kind="stable")
    pool_rows = pool_rows[order]

    def lookup(batch: Sequence[Architecture]) -> List[EvalRecord]:
        return [table[format_arch(a)] for a in batch]

    orchestrator = GbdtNasOrchestrator(config)
    return orchestrator._search(EvalCache(lookup), {"train": 0.0}, pool_rows=pool_rows)
