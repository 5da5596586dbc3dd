"""Tests for the operation vocabulary, the space definition and the architecture codec."""

import numpy as np
import pytest

from src.searchspace import (
    DEFAULT_SPACE,
    DISCOVERED_ARCH_TEXT,
    VOCABULARY,
    Architecture,
    ArchitectureParseError,
    OpCode,
    OpCodeError,
    OpKind,
    SpaceDef,
    SpaceSizeOverflowError,
    encode_onehot,
    enumerate_architectures,
    format_arch,
    iter_index_chunks,
    op_vocabulary,
    parse_arch,
    sample_uniform,
    space_size,
)


class TestOpVocabulary:
    """Candidate operations and their tokens"""

    def test_vocabulary_has_eleven_ops_in_canonical_order(self):
        tokens = [op.token for op in op_vocabulary()]
        assert tokens == ["mhsa2", "mhsa4", "mhsa8", "sep1", "sep5", "sep9", "sep13",
                          "sep17", "sep21", "sep25", "ffn"]

    def test_token_lookup_is_case_insensitive(self):
        assert OpCode.from_token("SEP13") == OpCode(OpKind.SEPCONV, 13)
        assert OpCode.from_token(" mhsa4 ") == OpCode(OpKind.MHSA, 4)

    def test_unknown_token_raises(self):
        with pytest.raises(OpCodeError):
            OpCode.from_token("sep7")

    @pytest.mark.parametrize("kind,param", [(OpKind.MHSA, 3), (OpKind.SEPCONV, 3), (OpKind.FFN, 1)])
    def test_illegal_parameters_rejected(self, kind, param):
        with pytest.raises(OpCodeError):
            OpCode(kind, param)


class TestSpaceSize:
    """Cardinality of search spaces"""

    def test_default_space_size(self):
        assert space_size(DEFAULT_SPACE) == 214_358_881

    def test_reduced_space_size(self, tiny_space):
        assert space_size(tiny_space) == 9

    def test_empty_slots_give_one_architecture(self):
        space = SpaceDef(encoder_slots=0, decoder_slots=0)
        assert space_size(space) == 1

    def test_overflow_is_reported(self):
        with pytest.raises(SpaceSizeOverflowError):
            space_size(SpaceDef(encoder_slots=10, decoder_slots=10))

    def test_vocabulary_is_kept_in_canonical_order(self):
        space = SpaceDef(1, 1, vocabulary=(OpCode(OpKind.FFN), OpCode(OpKind.MHSA, 2)))
        assert space.vocabulary == (OpCode(OpKind.MHSA, 2), OpCode(OpKind.FFN))

    def test_duplicate_vocabulary_rejected(self):
        with pytest.raises(ValueError):
            SpaceDef(1, 1, vocabulary=(OpCode(OpKind.FFN), OpCode(OpKind.FFN)))


class TestSampling:
    """Uniform sampling and enumeration"""

    def test_sampling_is_deterministic(self):
        assert sample_uniform(DEFAULT_SPACE, 7, 20) == sample_uniform(DEFAULT_SPACE, 7, 20)

    def test_different_seeds_differ(self):
        assert sample_uniform(DEFAULT_SPACE, 1, 20) != sample_uniform(DEFAULT_SPACE, 2, 20)

    def test_sample_count_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_uniform(DEFAULT_SPACE, 0, 0)

    def test_per_slot_frequencies_within_three_sigma(self):
        n = 11_000
        p = 1.0 / len(VOCABULARY)
        sigma = np.sqrt(p * (1.0 - p) / n)
        rows = DEFAULT_SPACE.to_indices(sample_uniform(DEFAULT_SPACE, 0, n))
        for slot in range(DEFAULT_SPACE.slots):
            freq = np.bincount(rows[:, slot], minlength=len(VOCABULARY)) / n
            assert np.all(np.abs(freq - p) <= 3 * sigma), slot

    def test_enumeration_is_lexicographic(self, tiny_space):
        archs = enumerate_architectures(tiny_space, 0, 9)
        assert len(set(archs)) == 9
        assert format_arch(archs[0]) == "enc:[mhsa2];dec:[mhsa2]"
        assert format_arch(archs[1]) == "enc:[mhsa2];dec:[sep5]"
        assert format_arch(archs[8]) == "enc:[ffn];dec:[ffn]"

    def test_enumeration_page_outside_space_raises(self, tiny_space):
        with pytest.raises(ValueError):
            enumerate_architectures(tiny_space, 5, 5)

    def test_rank_and_indices_are_inverse(self, small_space):
        ranks = np.arange(space_size(small_space))
        assert np.array_equal(small_space.rank_of(small_space.indices_at(ranks)), ranks)

    def test_chunks_walk_whole_space(self, small_space):
        chunks = list(iter_index_chunks(small_space, 100))
        assert [len(c) for c in chunks] == [100, 100, 56]
        all_ranks = np.concatenate([small_space.rank_of(c) for c in chunks])
        assert np.array_equal(all_ranks, np.arange(256))


class TestFeatures:
    """One-hot and ordinal featurization"""

    def test_onehot_has_one_bit_per_slot(self):
        arch = parse_arch(DISCOVERED_ARCH_TEXT)
        features = encode_onehot(arch, DEFAULT_SPACE)
        assert features.shape == (88,)
        assert features.sum() == 8
        for slot, op in enumerate(arch.ops):
            assert features[slot * 11 + DEFAULT_SPACE.op_index(op)] == 1

    def test_all_ffn_bits(self):
        arch = parse_arch("enc:[ffn,ffn,ffn,ffn];dec:[ffn,ffn,ffn,ffn]")
        features = encode_onehot(arch, DEFAULT_SPACE)
        assert set(np.flatnonzero(features).tolist()) == {10, 21, 32, 43, 54, 65, 76, 87}

    def test_onehot_is_injective(self, small_space):
        archs = enumerate_architectures(small_space, 0, space_size(small_space))
        encoded = {encode_onehot(arch, small_space).tobytes() for arch in archs}
        assert len(encoded) == len(archs) == 256

    def test_ordinal_features_carry_kernel_size(self, small_space):
        rows = small_space.to_indices([parse_arch("enc:[sep5,ffn];dec:[mhsa2,sep1]", small_space)])
        features = small_space.ordinal_indices(rows)
        assert features.shape == (1, 8)
        assert features[0, 1] == 5
        assert features[0, 5] == 2


class TestCodec:
    """Architecture text format"""

    def test_format_discovered_architecture(self):
        arch = parse_arch(DISCOVERED_ARCH_TEXT)
        assert format_arch(arch) == DISCOVERED_ARCH_TEXT
        assert str(arch) == DISCOVERED_ARCH_TEXT

    def test_parse_accepts_uppercase_tokens(self):
        arch = parse_arch("enc:[SEP5,sep25,sep13,sep9];dec:[sep17,sep21,sep9,sep13]")
        assert format_arch(arch) == DISCOVERED_ARCH_TEXT

    def test_unknown_token_names_token_and_position(self):
        with pytest.raises(ArchitectureParseError) as exc:
            parse_arch("enc:[sep5,sep7,sep13,sep9];dec:[sep17,sep21,sep9,sep13]")
        assert exc.value.token == "sep7"
        assert exc.value.position == len("enc:[sep5,")
        assert "sep7" in str(exc.value)

    def test_wrong_slot_count_rejected(self):
        with pytest.raises(ArchitectureParseError):
            parse_arch("enc:[sep5,sep25];dec:[sep17,sep21,sep9,sep13]")

    def test_slot_count_check_can_be_disabled(self):
        arch = parse_arch("enc:[mhsa2,ffn,mhsa2,ffn,mhsa2,ffn];dec:[ffn]", check_slots=False)
        assert len(arch.encoder_ops) == 6
        assert len(arch.decoder_ops) == 1

    def test_malformed_text_rejected(self):
        with pytest.raises(ArchitectureParseError):
            parse_arch("sep5,sep25")

    def test_op_outside_reduced_vocabulary_rejected(self, tiny_space):
        with pytest.raises(ArchitectureParseError):
            parse_arch("enc:[sep9];dec:[ffn]", tiny_space)

    def test_space_validates_foreign_architecture(self, tiny_space):
        arch = Architecture((VOCABULARY[0],) * 4, (VOCABULARY[0],) * 4)
        with pytest.raises(ValueError):
            tiny_space.validate(arch)

    def test_space_round_trips_through_dict(self, small_space):
        assert SpaceDef.from_dict(small_space.to_dict()) == small_space
