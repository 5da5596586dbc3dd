"""
Instantiate a ModelConfig into kernel weights and run its forward pass.

Used as the brute-force oracle for the analytical counts (element counting
and instrumented MACs) and as the workload for RTF profiling.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.kernels import (
    AuxKind,
    MacCounter,
    OpDims,
    OpInstance,
    SlotBlock,
    build_slot_block,
    forward,
    init_op,
    length_regulate,
    sinusoidal_positions,
)

from .accounting import (
    DECODER, DURATION, ENCODER, ENERGY, ENERGY_EMBEDDING, MEL, PITCH, PITCH_EMBEDDING,
)
from .config import ConvKind, MacsQuery, ModelConfig, PredictorSpec

logger = logging.getLogger(__name__)


@dataclass
class PredictorStack:
    """Variance predictor: [conv -> ReLU -> LayerNorm] x layers, then linear d -> 1."""
    convs: List[OpInstance]
    norms: List[Optional[OpInstance]]
    head: OpInstance

    def forward(self, h: np.ndarray, counter: Optional[MacCounter] = None) -> np.ndarray:
        for conv, norm in zip(self.convs, self.norms):
            h = np.maximum(forward(conv, h, counter), 0.0)
            if norm is not None:
                h = forward(norm, h, counter)
        return forward(self.head, h, counter)[:, 0]

    def parameter_count(self) -> int:
        ops = self.convs + [n for n in self.norms if n is not None] + [self.head]
        return sum(op.parameter_count() for op in ops)


def _build_predictor(spec: PredictorSpec, config: ModelConfig, seed: int, name: str) -> PredictorStack:
    d, bias = config.hidden, config.include_bias
    kind = AuxKind.SEPCONV1D if spec.conv == ConvKind.SEPCONV else AuxKind.CONV1D
    convs, norms = [], []
    for i in range(spec.layers):
        convs.append(init_op(kind, OpDims(d, d, kernel=spec.kernel, bias=bias), seed, f"{name}/conv{i}"))
        norms.append(init_op(AuxKind.LAYERNORM, OpDims(d, d), seed, f"{name}/norm{i}")
                     if config.include_layernorm else None)
    head = init_op(AuxKind.LINEAR, OpDims(d, 1, bias=bias), seed, f"{name}/head")
    return PredictorStack(convs=convs, norms=norms, head=head)


def even_durations(input_length: int, output_length: int) -> np.ndarray:
    """Per-token repeat counts summing exactly to output_length, spread as evenly as possible."""
    base, remainder = divmod(output_length, input_length)
    durations = np.full(input_length, base, dtype=np.int64)
    durations[:remainder] += 1
    return durations


def bucketize(values: np.ndarray, bins: int) -> np.ndarray:
    """Quantize predicted values in [-1, 1] into `bins` embedding indices."""
    edges = np.linspace(-1.0, 1.0, bins - 1)
    return np.clip(np.digitize(values, edges), 0, bins - 1)


@dataclass
class TTSModel:
    """Instantiated weights of a ModelConfig, grouped by cost component."""
    config: ModelConfig
    embedding: OpInstance
    encoder: List[SlotBlock]
    decoder: List[SlotBlock]
    predictors: Dict[str, PredictorStack]
    embeddings: Dict[str, OpInstance]
    mel: OpInstance
    timings: Dict[str, float] = field(default_factory=dict)

    def component_params(self) -> Dict[str, int]:
        """Element counts of the instantiated weights, per component."""
        counts = {
            ENCODER: self.embedding.parameter_count() + sum(b.parameter_count() for b in self.encoder),
            DECODER: sum(b.parameter_count() for b in self.decoder),
        }
        for name, stack in self.predictors.items():
            counts[name] = stack.parameter_count()
        counts[MEL] = self.mel.parameter_count()
        for name, table in self.embeddings.items():
            counts[name] = table.parameter_count()
        return counts

    @contextmanager
    def _component(self, name: str, counter: Optional[MacCounter]):
        if counter is not None:
            counter.scope(name)
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start
            if counter is not None:
                counter.scope(None)

    def _variance(self, h: np.ndarray, counter: Optional[MacCounter]) -> np.ndarray:
        for predictor, table in ((PITCH, PITCH_EMBEDDING), (ENERGY, ENERGY_EMBEDDING)):
            if predictor not in self.predictors:
                continue
            with self._component(predictor, counter):
                values = np.tanh(self.predictors[predictor].forward(h, counter))
            with self._component(table, counter):
                h = h + forward(self.embeddings[table], bucketize(values, self.config.pitch_bins))
        return h

    def forward(self, tokens: np.ndarray, output_length: int,
                counter: Optional[MacCounter] = None) -> np.ndarray:
        """
        Synthesize a mel sequence of `output_length` frames from phoneme tokens.

        Durations are spread evenly so the frame count is exact; the duration
        predictor still runs so its cost is incurred. Per-component seconds
        accumulate in `timings`.
        """
        cfg = self.config
        self.timings = {}
        with self._component(ENCODER, counter):
            h = forward(self.embedding, tokens, counter) + sinusoidal_positions(len(tokens), cfg.hidden)
            for block in self.encoder:
                h = block.forward(h, counter)
        with self._component(DURATION, counter):
            self.predictors[DURATION].forward(h, counter)
        if cfg.pitch_at_phoneme_level:
            h = self._variance(h, counter)
        with self._component(DECODER, counter):
            h = length_regulate(h, even_durations(len(tokens), output_length))
        if not cfg.pitch_at_phoneme_level:
            h = self._variance(h, counter)
        with self._component(DECODER, counter):
            h = h + sinusoidal_positions(output_length, cfg.hidden)
            for block in self.decoder:
                h = block.forward(h, counter)
        with self._component(MEL, counter):
            return forward(self.mel, h, counter)

    def sample_tokens(self, length: int, seed: int = 0) -> np.ndarray:
        return np.random.default_rng(seed).integers(0, self.config.phoneme_vocab, size=length)

    def count_macs(self, q: MacsQuery, seed: int = 0) -> Dict[str, int]:
        """MACs per component counted at every product site of one forward pass."""
        counter = MacCounter()
        self.forward(self.sample_tokens(q.input_length, seed), q.output_length, counter)
        counts = {name: int(counter.by_scope.get(name, 0)) for name in self.component_params()}
        logger.debug(f"{self.config.name}: instrumented {counter.total} MACs")
        return counts


def build_model(config: ModelConfig, seed: int = 0) -> TTSModel:
    """
    Create every weight of `config` through the kernels module.

    Raises:
        KernelConfigError: If operation dimensions are inconsistent
    """
    config.validate()
    d = config.hidden
    opts = dict(ffn_filter=config.ffn_filter, ffn_kernel=config.ffn_kernel,
                sepconv_repeats=config.sepconv_repeats, bias=config.include_bias,
                layernorm=config.include_layernorm)
    embedding = init_op(AuxKind.EMBEDDING, OpDims(config.phoneme_vocab, d), seed, "encoder/embedding")
    encoder = [build_slot_block(op, d, seed, f"encoder/slot{i}", **opts)
               for i, op in enumerate(config.architecture.encoder_ops)]
    decoder = [build_slot_block(op, d, seed, f"decoder/slot{i}", **opts)
               for i, op in enumerate(config.architecture.decoder_ops)]
    predictors = {name: _build_predictor(spec, config, seed, name.lower().replace(" ", "_"))
                  for name, spec in config.predictors().items()}
    embeddings = {PITCH_EMBEDDING: init_op(AuxKind.EMBEDDING, OpDims(config.pitch_bins, d), seed, "pitch/bins")}
    if config.energy_predictor is not None:
        embeddings[ENERGY_EMBEDDING] = init_op(AuxKind.EMBEDDING, OpDims(config.pitch_bins, d), seed, "energy/bins")
    mel = init_op(AuxKind.LINEAR, OpDims(d, config.mel_dim, bias=config.include_bias), seed, "mel")
    model = TTSModel(config=config, embedding=embedding, encoder=encoder, decoder=decoder,
                     predictors=predictors, embeddings=embeddings, mel=mel)
    logger.debug(f"Instantiated {config.name} with {sum(model.component_params().values())} weights")
    return model
