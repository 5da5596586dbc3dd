"""Tests for the search orchestration, its caches and the baselines."""

from dataclasses import replace

import numpy as np
import pytest

from src.costmodel import MacsQuery
from src.gbdt import GbdtConfig, encode_features, fit
from src.search import (
    EvalCache,
    PredictionPool,
    SearchConfig,
    SearchPhaseError,
    build_dataset,
    compare_search_space,
    evaluate_named_baselines,
    manual_genotype,
    rank_pool,
    render_search_report,
    run_gbdt_nas,
    run_gbdt_nas_from_table,
    run_random_search,
    sample_unique_indices,
    train_for_search,
)
from src.searchspace import OpCode, OpKind, SpaceDef, format_arch, space_size
from src.supernet import EvalLog, EvalRecord, build_supernet, evaluate_batch


class CountingOracle:
    """Deterministic fake loss that records every architecture it is asked for."""

    def __init__(self, space):
        self.space = space
        self.calls = []

    def __call__(self, archs):
        self.calls.extend(format_arch(a) for a in archs)
        ranks = self.space.rank_of(self.space.to_indices(list(archs)))
        return [EvalRecord(arch=a, val_loss=float(r) / 10.0) for a, r in zip(archs, ranks)]


def _planted_table(space, seed=0):
    rng = np.random.default_rng(seed)
    effects = rng.uniform(0.0, 1.0, size=(space.slots, len(space.vocabulary)))
    rows = space.indices_at(np.arange(space_size(space)))
    losses = effects[np.arange(space.slots), rows].sum(axis=1)
    return [EvalRecord(arch=a, val_loss=float(v)) for a, v in zip(space.from_indices(rows), losses)]


class TestEvalCache:
    """Deduplication and resume"""

    def test_duplicates_are_evaluated_once(self, tiny_space):
        oracle = CountingOracle(tiny_space)
        cache = EvalCache(oracle)
        archs = tiny_space.from_indices(tiny_space.indices_at(np.array([0, 1, 0, 2])))
        records = cache.evaluate(archs)
        assert len(records) == 4
        assert records[0] == records[2]
        assert len(oracle.calls) == 3
        assert cache.unique == 3

    def test_later_requests_count_as_reused(self, tiny_space):
        cache = EvalCache(CountingOracle(tiny_space))
        archs = tiny_space.from_indices(tiny_space.indices_at(np.arange(3)))
        cache.evaluate(archs)
        cache.evaluate(archs[:2])
        assert cache.reused == 2
        assert cache.unique == 3

    def test_resume_skips_logged_architectures(self, tmp_path, tiny_space):
        path = tmp_path / "evals.jsonl"
        archs = tiny_space.from_indices(tiny_space.indices_at(np.arange(5)))
        first = CountingOracle(tiny_space)
        EvalCache(first, EvalLog(path, tiny_space)).evaluate(archs[:3])

        second = CountingOracle(tiny_space)
        cache = EvalCache(second, EvalLog(path, tiny_space))
        records = cache.evaluate(archs)
        assert second.calls == [format_arch(a) for a in archs[3:]]
        assert [r.val_loss for r in records] == [0.0, 0.1, 0.2, 0.3, 0.4]
        assert cache.unique == 5
        assert len(path.read_text().splitlines()) == 5


    def test_bound_log_ignores_other_configurations(self, tmp_path, tiny_space):
        path = tmp_path / "evals.jsonl"
        archs = tiny_space.from_indices(tiny_space.indices_at(np.arange(3)))
        EvalCache(CountingOracle(tiny_space), EvalLog(path, tiny_space, fingerprint="a")).evaluate(archs)

        other = CountingOracle(tiny_space)
        EvalCache(other, EvalLog(path, tiny_space, fingerprint="b")).evaluate(archs)
        assert len(other.calls) == 3

        same = CountingOracle(tiny_space)
        EvalCache(same, EvalLog(path, tiny_space, fingerprint="a")).evaluate(archs)
        assert same.calls == []
        assert len(path.read_text().splitlines()) == 6


class TestSampling:
    def test_unique_draws(self, small_space):
        rows = sample_unique_indices(small_space, 100, np.random.default_rng(0))
        assert len(rows) == 100
        assert len(set(small_space.rank_of(rows).tolist())) == 100

    def test_request_covering_space_returns_enumeration(self, tiny_space):
        rows = sample_unique_indices(tiny_space, 50, np.random.default_rng(0))
        np.testing.assert_array_equal(tiny_space.rank_of(rows), np.arange(9))


class TestRankPool:
    """Top-k selection over the prediction pool"""

    def _constant_model(self, space):
        rows = space.indices_at(np.arange(4))
        return fit(encode_features(space, rows), np.full(4, 1.0), GbdtConfig(n_trees=1))

    def test_ties_break_by_enumeration_index(self, small_space):
        config = SearchConfig(space=small_space, n_initial=2, pool=PredictionPool.full(), top_k=5,
                              prediction_chunk=7)
        rows, preds, predictions = rank_pool(self._constant_model(small_space), config)
        np.testing.assert_array_equal(small_space.rank_of(rows), np.arange(5))
        assert predictions == 256
        assert np.all(preds == 1.0)

    def test_threaded_ranking_matches_serial(self, small_space):
        table = _planted_table(small_space)
        rows = small_space.to_indices([r.arch for r in table[::3]])
        model = fit(encode_features(small_space, rows), [r.val_loss for r in table[::3]])
        config = SearchConfig(space=small_space, n_initial=2, pool=PredictionPool.full(), top_k=10,
                              prediction_chunk=16)
        serial = rank_pool(model, config)
        threaded = rank_pool(model, config, workers=3)
        np.testing.assert_array_equal(serial[0], threaded[0])
        np.testing.assert_array_equal(serial[1], threaded[1])

    def test_sampled_pool_counts_distinct_candidates(self, small_space):
        config = SearchConfig(space=small_space, n_initial=2, pool=PredictionPool.sampled(40), top_k=5)
        _, _, predictions = rank_pool(self._constant_model(small_space), config)
        assert predictions <= 40


class TestConfig:
    def test_top_k_beyond_pool_rejected(self, tiny_space):
        with pytest.raises(ValueError):
            SearchConfig(space=tiny_space, n_initial=4, pool=PredictionPool.full(), top_k=10).validate()

    def test_dict_round_trip(self, tiny_search_config):
        assert SearchConfig.from_dict(tiny_search_config.to_dict()) == tiny_search_config

    def test_fingerprint_tracks_oracle_settings(self, tiny_search_config):
        base = tiny_search_config.fingerprint()
        assert tiny_search_config.with_seed(1).fingerprint() != base
        assert replace(tiny_search_config, lr=0.01).fingerprint() != base
        assert replace(tiny_search_config, noise_sigma=0.5).fingerprint() != base
        assert replace(tiny_search_config, dataset_sizes=(16, 16)).fingerprint() != base
        assert replace(tiny_search_config, teacher_arch="enc:[ffn];dec:[ffn]").fingerprint() != base
        assert replace(tiny_search_config, top_k=3).fingerprint() == base

    def test_invalid_pool_mode(self):
        with pytest.raises(ValueError):
            PredictionPool(mode="everything")


class TestTableSearch:
    """Predictor phases on a fixed (architecture, loss) table"""

    def test_finds_low_loss_architecture(self, small_space):
        table = _planted_table(small_space, seed=3)
        config = SearchConfig(space=small_space, n_initial=64, top_k=10,
                              gbdt=GbdtConfig(n_trees=100, max_leaves=8, min_samples_leaf=1))
        report = run_gbdt_nas_from_table(config, table)
        losses = np.array([r.val_loss for r in table])
        assert report.best_val_loss <= np.quantile(losses, 0.1)
        assert report.budget["gbdt_predictions"] == 256
        assert report.budget["planned_evals"] == 74
        assert report.budget["supernet_evals"] <= 74

    def test_table_smaller_than_budget_rejected(self, small_space):
        config = SearchConfig(space=small_space, n_initial=64, top_k=10)
        with pytest.raises(ValueError):
            run_gbdt_nas_from_table(config, _planted_table(small_space)[:20])


class TestGbdtSearch:
    """End-to-end search on the reduced space"""

    def _best_by_exhaustion(self, config, dataset, state):
        space = config.space
        records = evaluate_batch(state, space.from_indices(space.indices_at(np.arange(9))), dataset.dev)
        return min(records, key=lambda r: r.val_loss)

    def test_best_matches_exhaustive_argmin(self, tiny_search_config):
        dataset = build_dataset(tiny_search_config)
        state = train_for_search(tiny_search_config, dataset)
        report = run_gbdt_nas(tiny_search_config, dataset, state=state)
        best = self._best_by_exhaustion(tiny_search_config, dataset, state)
        assert report.best_arch == best.arch
        assert report.best_val_loss == best.val_loss

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(10))
    def test_best_matches_exhaustive_argmin_across_seeds(self, tiny_search_config, seed):
        config = tiny_search_config.with_seed(seed)
        dataset = build_dataset(config)
        state = train_for_search(config, dataset)
        report = run_gbdt_nas(config, dataset, state=state)
        assert report.best_arch == self._best_by_exhaustion(config, dataset, state).arch

    @pytest.mark.slow
    @pytest.mark.timeout(1800)
    def test_search_beats_random_sampling_across_seeds(self, tiny_search_config, small_space):
        """256-architecture space: 64 labeled, 32 re-evaluated, against the random draws."""
        beats_initial = beats_random_mean = 0
        for seed in range(10):
            config = replace(tiny_search_config, space=small_space, train_steps=200, batch=8, n_initial=64,
                             top_k=32, gbdt=GbdtConfig(), prediction_chunk=64, seed=seed)
            dataset = build_dataset(config)
            state = train_for_search(config, dataset)
            report = run_gbdt_nas(config, dataset, state=state)
            beats_initial += report.best_val_loss <= min(r.val_loss for r in report.initial_records)
            rows = {row["name"]: row["val_loss"] for row in compare_search_space(config, dataset, state=state)}
            assert rows["gbdt search"] == report.best_val_loss
            beats_random_mean += rows["random (mean of 10)"] > rows["gbdt search"]
        assert beats_initial >= 8
        assert beats_random_mean >= 8

    def test_budget_accounting(self, tiny_search_config):
        dataset = build_dataset(tiny_search_config)
        report = run_gbdt_nas(tiny_search_config, dataset)
        assert report.budget == {"planned_evals": 18, "supernet_evals": 9, "reused_evals": 9,
                                 "gbdt_predictions": 9}
        assert len(report.predicted) == 9
        assert set(report.timings) == {"train", "sample", "fit", "predict", "reevaluate", "select"}

    def test_runs_are_reproducible(self, tiny_search_config):
        first = run_gbdt_nas(tiny_search_config, build_dataset(tiny_search_config))
        second = run_gbdt_nas(tiny_search_config, build_dataset(tiny_search_config))
        assert first.to_dict(include_timings=False) == second.to_dict(include_timings=False)
        assert "timings" not in first.to_dict(include_timings=False)

    def test_failure_is_tagged_with_phase(self, tiny_search_config, small_space, tiny_dims):
        dataset = build_dataset(tiny_search_config)
        foreign = build_supernet(small_space, tiny_dims, seed=0)
        with pytest.raises(SearchPhaseError) as exc:
            run_gbdt_nas(tiny_search_config, dataset, state=foreign)
        assert exc.value.phase == "sample"
        assert isinstance(exc.value.__cause__, ValueError)

    def test_eval_log_is_written(self, tmp_path, tiny_search_config):
        dataset = build_dataset(tiny_search_config)
        log = EvalLog(tmp_path / "evals.jsonl", tiny_search_config.space)
        run_gbdt_nas(tiny_search_config, dataset, eval_log=log)
        assert len(log.load()) == 9

    def test_shared_log_keeps_seeds_apart(self, tmp_path, tiny_search_config):
        path = tmp_path / "evals.jsonl"
        for seed in (0, 1):
            config = tiny_search_config.with_seed(seed)
            shared = run_gbdt_nas(config, build_dataset(config),
                                  eval_log=EvalLog(path, config.space, fingerprint=config.fingerprint()))
        fresh = run_gbdt_nas(config, build_dataset(config))
        assert shared.to_dict(include_timings=False) == fresh.to_dict(include_timings=False)
        assert {r.seed for r in shared.initial_records} == {1}

    def test_report_renders_best_architecture(self, tiny_search_config):
        report = run_gbdt_nas(tiny_search_config, build_dataset(tiny_search_config))
        assert format_arch(report.best_arch) in render_search_report(report)


class TestRandomSearch:
    def test_mean_and_best(self, tiny_search_config):
        dataset = build_dataset(tiny_search_config)
        state = train_for_search(tiny_search_config, dataset)
        report = run_random_search(tiny_search_config, dataset, 6, state=state)
        losses = [r.val_loss for r in report.initial_records]
        assert len(losses) == 6
        assert report.method == "random"
        assert report.mean_val_loss == pytest.approx(np.mean(losses))
        assert report.best_val_loss == min(losses)
        assert report.budget["gbdt_predictions"] == 0

    def test_rejects_empty_draw(self, tiny_search_config):
        with pytest.raises(ValueError):
            run_random_search(tiny_search_config, build_dataset(tiny_search_config), 0)


class TestBaselines:
    """Named model costs and the search-space comparison"""

    def test_named_baselines(self):
        comparison = evaluate_named_baselines(MacsQuery(128, 740))
        assert [b.model for b in comparison.rows] == ["fastspeech2", "fastspeech2_small", "lightspeech"]
        assert comparison.row("lightspeech").totals["params"] == 1_628_754
        assert comparison.row("lightspeech").totals["macs"] == 760_793_088
        assert "lightspeech" in comparison.render()
        with pytest.raises(KeyError):
            comparison.row("tacotron")

    def test_manual_genotype_alternates(self, small_space):
        config = SearchConfig(space=small_space, n_initial=2, top_k=1)
        arch = manual_genotype(config)
        assert format_arch(arch) == "enc:[mhsa2,ffn];dec:[mhsa2,ffn]"

    def test_manual_genotype_needs_attention(self):
        space = SpaceDef(1, 1, vocabulary=(OpCode(OpKind.SEPCONV, 5), OpCode(OpKind.FFN)))
        assert manual_genotype(SearchConfig(space=space, n_initial=2, top_k=1)) is None

    def test_compare_search_space(self, tiny_search_config):
        dataset = build_dataset(tiny_search_config)
        rows = compare_search_space(tiny_search_config, dataset, n_random=4)
        names = [row["name"] for row in rows]
        assert names == ["manual", "random (mean of 4)", "gbdt search"]
        assert rows[-1]["val_loss"] <= rows[0]["val_loss"]

    def test_fixed_teacher_is_used(self, tiny_search_config, teacher_arch):
        config = replace(tiny_search_config, teacher_arch="enc:[sep5];dec:[ffn]")
        assert build_dataset(config).teacher_arch == teacher_arch
