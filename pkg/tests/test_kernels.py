"""Tests for the numpy kernels, slot blocks, gradient checks and the weight container."""

import numpy as np
import pytest

from src.kernels import (
    AuxKind,
    KernelConfigError,
    KernelShapeError,
    MacCounter,
    NonFiniteGradientError,
    OpDims,
    backward,
    build_slot_block,
    forward,
    grad_check,
    grad_check_block,
    init_op,
    length_regulate,
    length_regulate_backward,
    load_weights,
    save_weights,
    sinusoidal_positions,
)
from src.kernels.gradcheck import relative_error
from src.searchspace import VOCABULARY, OpCode, OpKind


def _dense_from_sepconv(op):
    """Dense (K, I, O) weight equivalent to a separable convolution."""
    return op.weights["depthwise"][:, :, None] * op.weights["pointwise"][None, :, :]


class TestLinearAndConv:
    """Linear, dense and separable convolution kernels"""

    def test_linear_matches_matmul(self, rng):
        op = init_op(AuxKind.LINEAR, OpDims(3, 5), seed=0, name="lin")
        x = rng.standard_normal((4, 3))
        y = forward(op, x)
        np.testing.assert_allclose(y, x @ op.weights["weight"] + op.weights["bias"], atol=1e-12)

    def test_sepconv_equals_dense_convolution(self, rng):
        sep = init_op(OpCode(OpKind.SEPCONV, 5), OpDims(4, 4, kernel=5), seed=1, name="sep")
        dense = init_op(AuxKind.CONV1D, OpDims(4, 4, kernel=5), seed=1, name="dense")
        dense.weights["weight"] = _dense_from_sepconv(sep)
        dense.weights["bias"] = sep.weights["bias"].copy()
        x = rng.standard_normal((7, 4))
        np.testing.assert_allclose(forward(sep, x), forward(dense, x), atol=1e-10)

    def test_kernel_one_sepconv_is_pointwise(self, rng):
        op = init_op(OpCode(OpKind.SEPCONV, 1), OpDims(3, 3, kernel=1), seed=2, name="sep1")
        x = rng.standard_normal((6, 3))
        expected = (x * op.weights["depthwise"][0]) @ op.weights["pointwise"] + op.weights["bias"]
        np.testing.assert_allclose(forward(op, x), expected, atol=1e-12)

    def test_conv_is_homogeneous_without_bias(self, rng):
        op = init_op(AuxKind.CONV1D, OpDims(3, 2, kernel=3, bias=False), seed=3, name="conv")
        x = rng.standard_normal((5, 3))
        np.testing.assert_allclose(forward(op, 2.5 * x), 2.5 * forward(op, x), rtol=1e-9)

    def test_sequence_shorter_than_kernel(self, rng):
        op = init_op(OpCode(OpKind.SEPCONV, 25), OpDims(4, 4, kernel=25), seed=4, name="sep25")
        x = rng.standard_normal((3, 4))
        assert forward(op, x).shape == (3, 4)

    def test_even_kernel_rejected(self):
        with pytest.raises(KernelConfigError):
            init_op(AuxKind.CONV1D, OpDims(3, 3, kernel=4), seed=0, name="bad")

    def test_wrong_width_rejected(self, rng):
        op = init_op(AuxKind.LINEAR, OpDims(3, 5), seed=0, name="lin")
        with pytest.raises(KernelShapeError):
            forward(op, rng.standard_normal((4, 4)))


class TestAttention:
    """Multi-head self-attention"""

    def test_attention_rows_are_stochastic(self, rng):
        op = init_op(OpCode(OpKind.MHSA, 2), OpDims(8, 8, heads=2), seed=0, name="attn")
        cache = {}
        forward(op, rng.standard_normal((5, 8)), cache=cache)
        np.testing.assert_allclose(cache["attn"].sum(axis=-1), 1.0, atol=1e-9)
        assert cache["attn"].shape == (2, 5, 5)

    def test_permutation_equivariance(self, rng):
        op = init_op(OpCode(OpKind.MHSA, 4), OpDims(8, 8, heads=4), seed=1, name="attn")
        x = rng.standard_normal((6, 8))
        perm = rng.permutation(6)
        np.testing.assert_allclose(forward(op, x[perm]), forward(op, x)[perm], atol=1e-9)

    def test_heads_must_divide_hidden(self):
        with pytest.raises(KernelConfigError):
            init_op(OpCode(OpKind.MHSA, 4), OpDims(6, 6, heads=4), seed=0, name="attn")

    def test_single_position_sequence(self, rng):
        op = init_op(OpCode(OpKind.MHSA, 2), OpDims(4, 4, heads=2), seed=0, name="attn")
        assert forward(op, rng.standard_normal((1, 4))).shape == (1, 4)


class TestFfnAndLayerNorm:
    """Feed-forward block and layer normalization"""

    def test_ffn_is_conv_then_linear(self, rng):
        op = init_op(OpCode(OpKind.FFN), OpDims(4, 4, hidden=6, kernel=3), seed=0, name="ffn")
        conv = init_op(AuxKind.CONV1D, OpDims(4, 6, kernel=3), seed=0, name="c")
        conv.weights = {"weight": op.weights["w1"], "bias": op.weights["b1"]}
        lin = init_op(AuxKind.LINEAR, OpDims(6, 4), seed=0, name="l")
        lin.weights = {"weight": op.weights["w2"], "bias": op.weights["b2"]}
        x = rng.standard_normal((7, 4))
        expected = forward(lin, np.maximum(forward(conv, x), 0.0))
        np.testing.assert_allclose(forward(op, x), expected, atol=1e-12)

    def test_layernorm_normalizes_rows(self, rng):
        op = init_op(AuxKind.LAYERNORM, OpDims(16, 16), seed=0, name="ln")
        x = 10.0 * rng.standard_normal((5, 16)) + 3.0
        y = forward(op, x)
        assert np.all(np.abs(y.mean(axis=1)) < 1e-9)
        np.testing.assert_allclose(y.var(axis=1), 1.0, atol=1e-6)

    def test_layernorm_costs_no_macs(self, rng):
        op = init_op(AuxKind.LAYERNORM, OpDims(8, 8), seed=0, name="ln")
        counter = MacCounter()
        forward(op, rng.standard_normal((4, 8)), counter)
        assert counter.total == 0


class TestLengthRegulation:
    """Duration expansion"""

    def test_rows_repeat_by_duration(self):
        h = np.arange(6, dtype=np.float64).reshape(3, 2)
        out = length_regulate(h, [2, 0, 1])
        np.testing.assert_array_equal(out, [[0, 1], [0, 1], [4, 5]])

    def test_backward_sums_repeated_rows(self):
        dy = np.ones((3, 2))
        np.testing.assert_array_equal(length_regulate_backward(dy, [2, 0, 1]), [[2, 2], [0, 0], [1, 1]])

    def test_all_zero_durations_rejected(self):
        with pytest.raises(ValueError):
            length_regulate(np.ones((2, 2)), [0, 0])

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            length_regulate(np.ones((2, 2)), [1, -1])

    def test_mismatched_durations_rejected(self):
        with pytest.raises(KernelShapeError):
            length_regulate(np.ones((2, 2)), [1, 1, 1])


class TestMacCounting:
    """MAC counter attribution"""

    def test_sepconv_macs(self, rng):
        op = init_op(OpCode(OpKind.SEPCONV, 5), OpDims(4, 3, kernel=5), seed=0, name="sep")
        counter = MacCounter()
        forward(op, rng.standard_normal((7, 4)), counter)
        assert counter.total == 7 * (5 * 4 + 4 * 3)

    def test_mhsa_macs(self, rng):
        op = init_op(OpCode(OpKind.MHSA, 2), OpDims(8, 8, heads=2), seed=0, name="attn")
        counter = MacCounter()
        forward(op, rng.standard_normal((5, 8)), counter)
        assert counter.total == 4 * 5 * 8 * 8 + 2 * 5 * 5 * 8

    def test_scopes_split_counts(self, rng):
        op = init_op(AuxKind.LINEAR, OpDims(3, 2), seed=0, name="lin")
        counter = MacCounter()
        counter.scope("a")
        forward(op, rng.standard_normal((4, 3)), counter)
        counter.scope("b")
        forward(op, rng.standard_normal((2, 3)), counter)
        counter.scope(None)
        forward(op, rng.standard_normal((1, 3)), counter)
        assert dict(counter.by_scope) == {"a": 24, "b": 12}
        assert counter.total == 42


class TestGradients:
    """Finite-difference validation of every backward pass"""

    def test_linear(self, rng):
        op = init_op(AuxKind.LINEAR, OpDims(3, 4), seed=0, name="lin")
        assert grad_check(op, rng.standard_normal((4, 3))) < 1e-6

    def test_sepconv(self, rng):
        op = init_op(OpCode(OpKind.SEPCONV, 5), OpDims(3, 3, kernel=5), seed=0, name="sep")
        assert grad_check(op, rng.standard_normal((6, 3))) < 1e-5

    def test_mhsa(self, rng):
        op = init_op(OpCode(OpKind.MHSA, 2), OpDims(8, 8, heads=2), seed=0, name="attn")
        assert grad_check(op, rng.standard_normal((5, 8))) < 1e-4

    @pytest.mark.parametrize("code", [AuxKind.CONV1D, AuxKind.LAYERNORM, AuxKind.SEPCONV1D])
    def test_auxiliary_kernels(self, rng, code):
        op = init_op(code, OpDims(4, 4, kernel=3), seed=0, name="aux")
        assert grad_check(op, rng.standard_normal((5, 4))) < 1e-4

    def test_layernorm_with_scaled_input(self, rng):
        op = init_op(AuxKind.LAYERNORM, OpDims(6, 6), seed=0, name="ln")
        op.weights["gain"] = rng.uniform(0.5, 1.5, size=6)
        assert grad_check(op, 10.0 * rng.standard_normal((4, 6))) < 1e-4

    def test_embedding(self):
        op = init_op(AuxKind.EMBEDDING, OpDims(10, 4), seed=0, name="emb")
        assert grad_check(op, np.array([1, 3, 3, 9])) < 1e-6

    def test_length_regulator(self, rng):
        op = init_op(AuxKind.LENGTH_REG, OpDims(3, 3, durations=(2, 0, 3)), seed=0, name="lr")
        assert grad_check(op, rng.standard_normal((3, 3))) < 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_every_slot_operation_over_seeds(self, seed):
        rng = np.random.default_rng(seed)
        for code in VOCABULARY:
            block = build_slot_block(code, d=8, seed=seed, name=f"blk/{code.token}",
                                     ffn_filter=12, ffn_kernel=3, sepconv_repeats=2)
            assert grad_check_block(block, rng.standard_normal((6, 8)), seed=seed) < 1e-4, code.token

    def test_small_gradients_are_compared_relatively(self):
        # 5% off on a 1e-6 gradient must not hide behind an absolute floor
        assert relative_error(np.array([1.0e-6]), np.array([1.05e-6])) > 1e-3
        assert relative_error(np.array([2.0, 0.0]), np.array([2.0 + 1e-9, 1e-12])) < 1e-6

    def test_eps_outside_range_rejected(self, rng):
        op = init_op(AuxKind.LINEAR, OpDims(2, 2), seed=0, name="lin")
        with pytest.raises(ValueError):
            grad_check(op, rng.standard_normal((2, 2)), eps=1e-1)

    def test_non_finite_gradient_detected(self, rng):
        op = init_op(AuxKind.LINEAR, OpDims(2, 2), seed=0, name="lin")
        op.weights["weight"][0, 0] = np.nan
        with pytest.raises(NonFiniteGradientError):
            grad_check(op, rng.standard_normal((2, 2)))


class TestSlotBlocks:
    """Residual slot wrappers"""

    def test_sepconv_slot_stacks_repeats(self):
        block = build_slot_block(OpCode(OpKind.SEPCONV, 9), d=8, seed=0, name="s",
                                 ffn_filter=16, ffn_kernel=3, sepconv_repeats=2)
        assert len(block.stages) == 2
        per_conv = 9 * 8 + 8 * 8 + 8
        assert block.parameter_count() == 2 * per_conv + 2 * 8

    def test_block_is_residual(self, rng):
        block = build_slot_block(OpCode(OpKind.FFN), d=4, seed=0, name="f", ffn_filter=8, ffn_kernel=3)
        for w in block.stages[0].weights.values():
            w[...] = 0.0
        x = rng.standard_normal((3, 4))
        np.testing.assert_allclose(block.forward(x), x)

    def test_block_gradient(self, rng):
        block = build_slot_block(OpCode(OpKind.SEPCONV, 5), d=4, seed=1, name="s",
                                 ffn_filter=8, ffn_kernel=3, sepconv_repeats=2)
        assert grad_check_block(block, rng.standard_normal((5, 4))) < 1e-4

    def test_weights_are_seeded_by_name(self):
        a = build_slot_block(OpCode(OpKind.MHSA, 2), d=4, seed=5, name="x", ffn_filter=8, ffn_kernel=3)
        b = build_slot_block(OpCode(OpKind.MHSA, 2), d=4, seed=5, name="x", ffn_filter=8, ffn_kernel=3)
        c = build_slot_block(OpCode(OpKind.MHSA, 2), d=4, seed=5, name="y", ffn_filter=8, ffn_kernel=3)
        np.testing.assert_array_equal(a.weights["stage0/wq"], b.weights["stage0/wq"])
        assert not np.array_equal(a.weights["stage0/wq"], c.weights["stage0/wq"])


class TestPositions:
    def test_sinusoidal_table(self):
        table = sinusoidal_positions(5, 4)
        assert table.shape == (5, 4)
        np.testing.assert_allclose(table[0], [0.0, 1.0, 0.0, 1.0])
        np.testing.assert_allclose(table[1, 0], np.sin(1.0))
        np.testing.assert_allclose(table[1, 3], np.cos(1.0 / 100.0))


class TestWeightContainer:
    """Binary weight container"""

    def test_save_and_load_preserve_weights(self, tmp_path):
        ops = {
            "a": init_op(OpCode(OpKind.MHSA, 2), OpDims(4, 4, heads=2), seed=0, name="a"),
            "b": init_op(AuxKind.SEPCONV1D, OpDims(4, 4, kernel=3), seed=0, name="b"),
            "c": init_op(AuxKind.LENGTH_REG, OpDims(2, 2, durations=(1, 2)), seed=0, name="c"),
        }
        save_weights(tmp_path / "w.bin", ops)
        loaded = load_weights(tmp_path / "w.bin")
        assert list(loaded) == ["a", "b", "c"]
        assert loaded["a"].code == OpCode(OpKind.MHSA, 2)
        assert loaded["b"].code == AuxKind.SEPCONV1D
        assert loaded["c"].dims.durations == (1, 2)
        for name, op in ops.items():
            for wname, w in op.weights.items():
                np.testing.assert_array_equal(loaded[name].weights[wname], w)

    def test_foreign_file_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a container")
        with pytest.raises(ValueError):
            load_weights(path)

    def test_truncated_file_rejected(self, tmp_path):
        ops = {"a": init_op(AuxKind.LINEAR, OpDims(3, 3), seed=0, name="a")}
        save_weights(tmp_path / "w.bin", ops)
        data = (tmp_path / "w.bin").read_bytes()
        (tmp_path / "w.bin").write_bytes(data[:-10])
        with pytest.raises(ValueError):
            load_weights(tmp_path / "w.bin")
