"""Shared fixtures for the test suite."""

import os
import sys

import numpy as np
import pytest

# Make `src` importable when tests run from any directory
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.searchspace import OpCode, OpKind, SpaceDef, parse_arch
from src.search import PredictionPool, SearchConfig
from src.supernet import ToyDims
from src.gbdt import GbdtConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_space():
    """1 + 1 slots over three operations: 9 architectures."""
    return SpaceDef(
        encoder_slots=1,
        decoder_slots=1,
        vocabulary=(OpCode(OpKind.MHSA, 2), OpCode(OpKind.SEPCONV, 5), OpCode(OpKind.FFN)),
    )


@pytest.fixture
def small_space():
    """2 + 2 slots over four operations: 256 architectures."""
    return SpaceDef(
        encoder_slots=2,
        decoder_slots=2,
        vocabulary=(OpCode(OpKind.MHSA, 2), OpCode(OpKind.SEPCONV, 1),
                    OpCode(OpKind.SEPCONV, 5), OpCode(OpKind.FFN)),
    )


@pytest.fixture
def tiny_dims():
    return ToyDims(hidden=8, length=8, vocab=12, ffn_filter=16, ffn_kernel=3,
                   out_dim=4, max_duration=2, sepconv_repeats=1)


@pytest.fixture
def tiny_search_config(tiny_space, tiny_dims):
    """Exhaustive budget on the 9-architecture space with a short supernet schedule."""
    return SearchConfig(
        space=tiny_space,
        dims=tiny_dims,
        train_steps=40,
        batch=4,
        n_initial=9,
        pool=PredictionPool.full(),
        top_k=9,
        gbdt=GbdtConfig(n_trees=20, max_leaves=4, learning_rate=0.3, min_samples_leaf=1),
        dataset_sizes=(32, 16),
        prediction_chunk=4,
    )


@pytest.fixture
def teacher_arch(tiny_space):
    return parse_arch("enc:[sep5];dec:[ffn]", tiny_space)


@pytest.fixture
def configs_dir():
    return os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")
