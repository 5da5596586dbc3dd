"""
Analytical parameter and multiply-accumulate accounting.

Component names used throughout: Encoder (phoneme embedding included),
Decoder, Duration/Pitch/Energy Predictor, Mel Projection, and the auxiliary
Pitch/Energy Embedding tables.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional, Union

from src.kernels import AuxKind
from src.searchspace import OpCode, OpKind

from .config import ConvKind, MacsQuery, ModelConfig, PredictorSpec
from .report import ComponentCost, CostBreakdown

logger = logging.getLogger(__name__)

Op = Union[OpCode, AuxKind]

ENCODER = "Encoder"
DECODER = "Decoder"
DURATION = "Duration Predictor"
PITCH = "Pitch Predictor"
ENERGY = "Energy Predictor"
MEL = "Mel Projection"
PITCH_EMBEDDING = "Pitch Embedding"
ENERGY_EMBEDDING = "Energy Embedding"


def op_params(op: Op, d: int, f: int = 0, include_bias: bool = True, *,
              kernel: Optional[int] = None, d_out: Optional[int] = None, ffn_kernel: int = 9) -> int:
    """
    Parameter count of a single operation.

    Args:
        op: Searched OpCode or auxiliary kernel kind
        d: Input width (table rows for EMBEDDING)
        f: FFN filter width
        include_bias: Count bias vectors
        kernel: Kernel size for CONV1D / SEPCONV1D (SEPCONV takes it from the OpCode)
        d_out: Output width for LINEAR, CONV1D, SEPCONV and EMBEDDING (defaults to d)
        ffn_kernel: Kernel of the FFN's first convolution

    Returns:
        Number of scalar weights
    """
    o = d if d_out is None else d_out
    b = 1 if include_bias else 0
    if isinstance(op, OpCode):
        if op.kind == OpKind.SEPCONV:
            return op.param * d + d * o + b * o
        if op.kind == OpKind.MHSA:
            return 4 * d * d + b * 4 * d
        return ffn_kernel * d * f + f * d + b * (f + d)
    if op == AuxKind.SEPCONV1D:
        return (kernel or 1) * d + d * o + b * o
    if op == AuxKind.CONV1D:
        return (kernel or 1) * d * o + b * o
    if op == AuxKind.LINEAR:
        return d * o + b * o
    if op == AuxKind.LAYERNORM:
        return 2 * d
    if op == AuxKind.EMBEDDING:
        return d * o
    return 0


def op_macs(op: Op, length: int, d: int, f: int = 0, *, kernel: Optional[int] = None,
            d_out: Optional[int] = None, ffn_kernel: int = 9) -> int:
    """Multiply-accumulates of one operation applied to a length-L sequence."""
    o = d if d_out is None else d_out
    L = length
    if isinstance(op, OpCode):
        if op.kind == OpKind.SEPCONV:
            return L * (op.param * d + d * o)
        if op.kind == OpKind.MHSA:
            return 4 * L * d * d + 2 * L * L * d
        return L * ffn_kernel * d * f + L * f * d
    if op == AuxKind.SEPCONV1D:
        return L * ((kernel or 1) * d + d * o)
    if op == AuxKind.CONV1D:
        return L * (kernel or 1) * d * o
    if op == AuxKind.LINEAR:
        return L * d * o
    return 0


def slot_params(op: OpCode, config: ModelConfig) -> int:
    """Parameters of one residual slot: pre-LayerNorm plus the operation stack."""
    d, bias = config.hidden, config.include_bias
    norm = op_params(AuxKind.LAYERNORM, d) if config.include_layernorm else 0
    repeats = config.sepconv_repeats if op.kind == OpKind.SEPCONV else 1
    return norm + repeats * op_params(op, d, config.ffn_filter, bias, ffn_kernel=config.ffn_kernel)


def slot_macs(op: OpCode, length: int, config: ModelConfig) -> int:
    repeats = config.sepconv_repeats if op.kind == OpKind.SEPCONV else 1
    return repeats * op_macs(op, length, config.hidden, config.ffn_filter, ffn_kernel=config.ffn_kernel)


def _predictor_conv(spec: PredictorSpec) -> AuxKind:
    return AuxKind.SEPCONV1D if spec.conv == ConvKind.SEPCONV else AuxKind.CONV1D


def predictor_params(spec: PredictorSpec, config: ModelConfig) -> int:
    d, bias = config.hidden, config.include_bias
    norm = op_params(AuxKind.LAYERNORM, d) if config.include_layernorm else 0
    layer = op_params(_predictor_conv(spec), d, include_bias=bias, kernel=spec.kernel) + norm
    return spec.layers * layer + op_params(AuxKind.LINEAR, d, include_bias=bias, d_out=1)


def predictor_macs(spec: PredictorSpec, length: int, config: ModelConfig) -> int:
    d = config.hidden
    layer = op_macs(_predictor_conv(spec), length, d, kernel=spec.kernel)
    return spec.layers * layer + op_macs(AuxKind.LINEAR, length, d, d_out=1)


def predictor_lengths(config: ModelConfig, q: MacsQuery) -> Dict[str, int]:
    """Sequence length each variance predictor runs at."""
    variance = q.input_length if config.pitch_at_phoneme_level else q.output_length
    return {DURATION: q.input_length, PITCH: variance, ENERGY: variance}


def analytic_param_counts(config: ModelConfig) -> Dict[str, int]:
    """Per-component parameter counts, core components first, auxiliaries last."""
    d = config.hidden
    counts = {
        ENCODER: op_params(AuxKind.EMBEDDING, config.phoneme_vocab, d_out=d)
        + sum(slot_params(op, config) for op in config.architecture.encoder_ops),
        DECODER: sum(slot_params(op, config) for op in config.architecture.decoder_ops),
    }
    for name, spec in config.predictors().items():
        counts[name] = predictor_params(spec, config)
    counts[MEL] = op_params(AuxKind.LINEAR, d, include_bias=config.include_bias, d_out=config.mel_dim)
    counts[PITCH_EMBEDDING] = op_params(AuxKind.EMBEDDING, config.pitch_bins, d_out=d)
    if config.energy_predictor is not None:
        counts[ENERGY_EMBEDDING] = op_params(AuxKind.EMBEDDING, config.pitch_bins, d_out=d)
    return counts


def analytic_mac_counts(config: ModelConfig, q: MacsQuery) -> Dict[str, int]:
    """Per-component MACs at the query lengths (table lookups cost nothing)."""
    arch = config.architecture
    lengths = predictor_lengths(config, q)
    counts = {
        ENCODER: sum(slot_macs(op, q.input_length, config) for op in arch.encoder_ops),
        DECODER: sum(slot_macs(op, q.output_length, config) for op in arch.decoder_ops),
    }
    for name, spec in config.predictors().items():
        counts[name] = predictor_macs(spec, lengths[name], config)
    counts[MEL] = op_macs(AuxKind.LINEAR, q.output_length, config.hidden, d_out=config.mel_dim)
    counts[PITCH_EMBEDDING] = 0
    if config.energy_predictor is not None:
        counts[ENERGY_EMBEDDING] = 0
    return counts


def _is_auxiliary(name: str) -> bool:
    return name in (PITCH_EMBEDDING, ENERGY_EMBEDDING)


def _breakdown(config: ModelConfig, column: str, counts: Dict[str, int],
               query: Optional[MacsQuery] = None) -> CostBreakdown:
    rows: List[ComponentCost] = [
        ComponentCost(name=name, auxiliary=_is_auxiliary(name), **{column: int(value)})
        for name, value in counts.items()
    ]
    return CostBreakdown(model=config.name, components=rows, query=query)


def model_params(config: ModelConfig, brute_force: bool = False) -> CostBreakdown:
    """
    Per-component parameter counts of `config`.

    Args:
        config: Model description
        brute_force: Instantiate every weight through the kernels and count
            elements instead of using the closed-form expressions

    Returns:
        CostBreakdown with the params column filled
    """
    config.validate()
    if brute_force:
        from .instantiate import build_model
        counts = build_model(config).component_params()
    else:
        counts = analytic_param_counts(config)
    breakdown = _breakdown(config, "params", counts)
    logger.debug(f"{config.name}: {breakdown.totals['params']} core parameters")
    return breakdown


def model_macs(config: ModelConfig, q: MacsQuery, instrumented: bool = False) -> CostBreakdown:
    """
    Per-component MACs of one forward pass at the query lengths.

    The alternative total with the pitch/energy predictors moved to the other
    sequence length is recorded in `alternatives`.

    Args:
        config: Model description
        q: Sequence lengths
        instrumented: Count MACs by running an instantiated forward pass
    """
    config.validate()
    if instrumented:
        from .instantiate import build_model
        counts = build_model(config).count_macs(q)
    else:
        counts = analytic_mac_counts(config, q)
    breakdown = _breakdown(config, "macs", counts, query=q)

    flipped = replace(config, pitch_at_phoneme_level=not config.pitch_at_phoneme_level)
    flipped_total = sum(v for k, v in analytic_mac_counts(flipped, q).items() if not _is_auxiliary(k))
    label = "macs_pitch_at_frame_level" if config.pitch_at_phoneme_level else "macs_pitch_at_phoneme_level"
    breakdown.alternatives[label] = int(flipped_total)
    return breakdown


def cost_report(config: ModelConfig, q: MacsQuery, repetitions: int = 0, seed: int = 0) -> CostBreakdown:
    """Params and MACs, plus profiled RTF when repetitions > 0."""
    breakdown = model_params(config).merge(model_macs(config, q))
    if repetitions > 0:
        from .profiler import profile
        breakdown = breakdown.merge(profile(config, q, repetitions, seed=seed))
    return breakdown


def predictor_savings(config: ModelConfig) -> Dict[str, Dict[str, int]]:
    """Parameters of each variance predictor with vanilla and with separable convolutions."""
    vanilla = replace(
        config,
        duration_predictor=replace(config.duration_predictor, conv=ConvKind.VANILLA),
        pitch_predictor=replace(config.pitch_predictor, conv=ConvKind.VANILLA),
        energy_predictor=(replace(config.energy_predictor, conv=ConvKind.VANILLA)
                          if config.energy_predictor else None),
    )
    separable = vanilla.with_sepconv_predictors()
    rows = {}
    for name, spec in vanilla.predictors().items():
        sep_spec = separable.predictors()[name]
        rows[name] = {
            "vanilla": predictor_params(spec, vanilla),
            "sepconv": predictor_params(sep_spec, separable),
        }
    return rows
