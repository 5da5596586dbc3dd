"""
Model descriptions for cost accounting and kernel instantiation.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional

from src.searchspace import Architecture, OpCode, OpKind, parse_arch, format_arch, DISCOVERED_ARCH_TEXT

logger = logging.getLogger(__name__)


class ConvKind(Enum):
    """Convolution used inside variance predictors."""
    VANILLA = "vanilla"
    SEPCONV = "sepconv"


@dataclass(frozen=True)
class PredictorSpec:
    """A stack of `layers` conv -> ReLU -> LayerNorm layers followed by a linear d -> 1."""
    layers: int
    kernel: int
    conv: ConvKind = ConvKind.VANILLA

    def to_dict(self) -> Dict[str, Any]:
        return {"layers": self.layers, "kernel": self.kernel, "conv": self.conv.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PredictorSpec":
        return cls(layers=int(data["layers"]), kernel=int(data["kernel"]),
                   conv=ConvKind(data.get("conv", ConvKind.VANILLA.value)))


DURATION_PREDICTOR = PredictorSpec(layers=2, kernel=3)
PITCH_PREDICTOR = PredictorSpec(layers=5, kernel=5)


@dataclass(frozen=True)
class MacsQuery:
    """Sequence lengths and audio framing at which MACs and RTF are priced."""
    input_length: int = 128
    output_length: int = 740
    hop: int = 256
    sample_rate: int = 22050

    def __post_init__(self):
        for name in ("input_length", "output_length", "hop", "sample_rate"):
            if getattr(self, name) < 1:
                raise ValueError(f"MacsQuery.{name} must be positive, got {getattr(self, name)}")

    @property
    def audio_seconds(self) -> float:
        """Seconds of audio covered by `output_length` frames."""
        return self.output_length * self.hop / self.sample_rate

    def to_dict(self) -> Dict[str, Any]:
        return {"input_length": self.input_length, "output_length": self.output_length,
                "hop": self.hop, "sample_rate": self.sample_rate}


@dataclass(frozen=True)
class ModelConfig:
    """
    Everything needed to price or instantiate a non-autoregressive TTS model.

    `architecture` may hold any number of encoder and decoder slots. With
    `sepconv_repeats` > 1 a SepConv slot stacks that many separable
    convolutions with ReLU in between.
    """
    architecture: Architecture
    name: str = "model"
    hidden: int = 256
    phoneme_vocab: int = 84
    mel_dim: int = 80
    duration_predictor: PredictorSpec = DURATION_PREDICTOR
    pitch_predictor: PredictorSpec = PITCH_PREDICTOR
    energy_predictor: Optional[PredictorSpec] = None
    ffn_filter: int = 1024
    ffn_kernel: int = 9
    include_bias: bool = True
    include_layernorm: bool = True
    sepconv_repeats: int = 2
    pitch_bins: int = 256
    pitch_at_phoneme_level: bool = False

    def validate(self) -> None:
        """
        Check dimensions for consistency.

        Raises:
            ValueError: If a dimension is non-positive, a kernel even, or MHSA
                heads do not divide the hidden size
        """
        for attr in ("hidden", "phoneme_vocab", "mel_dim", "ffn_filter", "ffn_kernel",
                     "sepconv_repeats", "pitch_bins"):
            if getattr(self, attr) < 1:
                raise ValueError(f"{attr} must be positive, got {getattr(self, attr)}")
        if self.ffn_kernel % 2 != 1:
            raise ValueError(f"ffn_kernel must be odd, got {self.ffn_kernel}")
        for label, spec in self.predictors().items():
            if spec.layers < 1 or spec.kernel < 1 or spec.kernel % 2 != 1:
                raise ValueError(f"{label} needs >= 1 layer and an odd kernel, got {spec}")
        for op in self.architecture.ops:
            if op.kind == OpKind.MHSA and self.hidden % op.param != 0:
                raise ValueError(f"MHSA heads {op.param} do not divide hidden size {self.hidden}")

    def predictors(self) -> Dict[str, PredictorSpec]:
        """Variance predictors present in the model, keyed by component name."""
        found = {"Duration Predictor": self.duration_predictor, "Pitch Predictor": self.pitch_predictor}
        if self.energy_predictor is not None:
            found["Energy Predictor"] = self.energy_predictor
        return found

    def with_sepconv_predictors(self) -> "ModelConfig":
        """Same model with every variance predictor switched to SepConv layers."""
        energy = self.energy_predictor
        return replace(
            self,
            name=f"{self.name}+sepconv-predictors",
            duration_predictor=replace(self.duration_predictor, conv=ConvKind.SEPCONV),
            pitch_predictor=replace(self.pitch_predictor, conv=ConvKind.SEPCONV),
            energy_predictor=replace(energy, conv=ConvKind.SEPCONV) if energy else None,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": 1,
            "name": self.name,
            "architecture": format_arch(self.architecture),
            "hidden": self.hidden,
            "phoneme_vocab": self.phoneme_vocab,
            "mel_dim": self.mel_dim,
            "duration_predictor": self.duration_predictor.to_dict(),
            "pitch_predictor": self.pitch_predictor.to_dict(),
            "energy_predictor": self.energy_predictor.to_dict() if self.energy_predictor else None,
            "ffn_filter": self.ffn_filter,
            "ffn_kernel": self.ffn_kernel,
            "include_bias": self.include_bias,
            "include_layernorm": self.include_layernorm,
            "sepconv_repeats": self.sepconv_repeats,
            "pitch_bins": self.pitch_bins,
            "pitch_at_phoneme_level": self.pitch_at_phoneme_level,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        """Build a config from its JSON document form (see src.config.schemas)."""
        kwargs = {k: v for k, v in data.items() if k not in ("version", "architecture")}
        for key in ("duration_predictor", "pitch_predictor", "energy_predictor"):
            if kwargs.get(key) is not None:
                kwargs[key] = PredictorSpec.from_dict(kwargs[key])
        config = cls(architecture=parse_arch(data["architecture"], check_slots=False), **kwargs)
        config.validate()
        return config


def _transformer_arch(blocks: int) -> Architecture:
    # One FFT block = self-attention slot followed by a feed-forward slot
    side = tuple(op for _ in range(blocks) for op in (OpCode(OpKind.MHSA, 2), OpCode(OpKind.FFN)))
    return Architecture(encoder_ops=side, decoder_ops=side)


def fastspeech2_config() -> ModelConfig:
    """Baseline: 4 FFT blocks per side, d=256, f=1024, k_f=9, energy predictor on."""
    return ModelConfig(
        name="fastspeech2",
        architecture=_transformer_arch(4),
        energy_predictor=PITCH_PREDICTOR,
    )


def fastspeech2_small_config() -> ModelConfig:
    """Shrunk baseline: 2 FFT blocks per side, d=128, f=256, no energy, SepConv predictors."""
    return ModelConfig(
        name="fastspeech2_small",
        architecture=_transformer_arch(2),
        hidden=128,
        ffn_filter=256,
        duration_predictor=replace(DURATION_PREDICTOR, conv=ConvKind.SEPCONV),
        pitch_predictor=replace(PITCH_PREDICTOR, conv=ConvKind.SEPCONV),
    )


def lightspeech_config() -> ModelConfig:
    """The discovered all-SepConv architecture with SepConv predictors and no energy predictor."""
    return ModelConfig(
        name="lightspeech",
        architecture=parse_arch(DISCOVERED_ARCH_TEXT),
        duration_predictor=replace(DURATION_PREDICTOR, conv=ConvKind.SEPCONV),
        pitch_predictor=replace(PITCH_PREDICTOR, conv=ConvKind.SEPCONV),
    )


CANNED_CONFIGS = {
    "fastspeech2": fastspeech2_config,
    "fastspeech2_small": fastspeech2_small_config,
    "lightspeech": lightspeech_config,
}
