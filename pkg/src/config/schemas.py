"""
Pydantic models for every JSON document read or written by the tools.

Input documents reject unknown keys; output documents describe what the
commands emit; the shipped schemas/*.schema.json files are generated from them
with output_schema().
"""

from typing import Any, Dict, List, Literal, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

T = TypeVar("T", bound=BaseModel)


class ConfigDocumentError(ValueError):
    """Raised when a config document fails validation; `key` names the offending field."""

    def __init__(self, message: str, key: Optional[str] = None, source: Optional[str] = None):
        super().__init__(message)
        self.key = key
        self.source = source


class _Input(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: Literal[1]


class _Part(BaseModel):
    model_config = ConfigDict(extra="forbid")


# Inputs

class SpaceDocument(_Input):
    encoder_slots: int = Field(default=4, ge=0)
    decoder_slots: int = Field(default=4, ge=0)
    vocabulary: List[str] = Field(min_length=1)


class PredictorDocument(_Part):
    layers: int = Field(ge=1)
    kernel: int = Field(ge=1)
    conv: Literal["vanilla", "sepconv"] = "vanilla"

    @field_validator("kernel")
    @classmethod
    def _odd(cls, v: int) -> int:
        if v % 2 != 1:
            raise ValueError("kernel must be odd")
        return v


class ModelConfigDocument(_Input):
    name: str = "model"
    architecture: str
    hidden: int = Field(default=256, gt=0)
    phoneme_vocab: int = Field(default=84, gt=0)
    mel_dim: int = Field(default=80, gt=0)
    duration_predictor: PredictorDocument = PredictorDocument(layers=2, kernel=3)
    pitch_predictor: PredictorDocument = PredictorDocument(layers=5, kernel=5)
    energy_predictor: Optional[PredictorDocument] = None
    ffn_filter: int = Field(default=1024, gt=0)
    ffn_kernel: int = Field(default=9, gt=0)
    include_bias: bool = True
    include_layernorm: bool = True
    sepconv_repeats: int = Field(default=2, ge=1)
    pitch_bins: int = Field(default=256, ge=2)
    pitch_at_phoneme_level: bool = False


class SpacePart(_Part):
    encoder_slots: int = Field(ge=0)
    decoder_slots: int = Field(ge=0)
    vocabulary: List[str] = Field(min_length=1)


class DimsPart(_Part):
    hidden: int = Field(default=32, gt=0)
    length: int = Field(default=24, gt=0)
    vocab: int = Field(default=40, gt=1)
    ffn_filter: int = Field(default=64, gt=0)
    ffn_kernel: int = Field(default=3, gt=0)
    out_dim: int = Field(default=8, gt=0)
    max_duration: int = Field(default=3, ge=1)
    sepconv_repeats: int = Field(default=2, ge=1)


class PoolPart(_Part):
    mode: Literal["full", "sampled"] = "sampled"
    size: int = Field(default=1_000_000, ge=0)


class GbdtPart(_Part):
    n_trees: int = Field(default=100, ge=1)
    max_leaves: int = Field(default=31, ge=2)
    learning_rate: float = Field(default=0.1, gt=0.0, le=1.0)
    min_samples_leaf: int = Field(default=2, ge=1)
    feature_encoding: Literal["onehot", "ordinal"] = "onehot"


class SearchConfigDocument(_Input):
    space: Optional[SpacePart] = None
    dims: DimsPart = DimsPart()
    train_steps: int = Field(default=2000, ge=0)
    batch: int = Field(default=8, ge=1)
    lr: float = Field(default=0.05, ge=0.0)
    n_initial: int = Field(default=1000, ge=2)
    pool: PoolPart = PoolPart()
    top_k: int = Field(default=300, ge=1)
    gbdt: GbdtPart = GbdtPart()
    seed: int = 0
    noise_sigma: float = Field(default=0.01, ge=0.0)
    dataset_sizes: List[int] = Field(default=[256, 64], min_length=2, max_length=2)
    teacher_arch: Optional[str] = None
    prediction_chunk: int = Field(default=65536, ge=1)


# Outputs

class _Output(BaseModel):
    model_config = ConfigDict(extra="forbid")


class QueryDocument(_Output):
    input_length: int
    output_length: int
    hop: int
    sample_rate: int


class ComponentDocument(_Output):
    name: str
    params: Optional[int] = Field(default=None, ge=0)
    macs: Optional[int] = Field(default=None, ge=0)
    rtf: Optional[float] = Field(default=None, ge=0.0)
    auxiliary: bool = False


class CostBreakdownDocument(_Output):
    version: Literal[1]
    model: str
    components: List[ComponentDocument]
    totals: Dict[str, Optional[Union[int, float]]]
    alternatives: Dict[str, int]
    query: Optional[QueryDocument]
    repetitions: Optional[int]
    conventions: List[str]


class BaselineComparisonDocument(_Output):
    version: Literal[1]
    models: List[CostBreakdownDocument]
    predictor_savings: Dict[str, Dict[str, int]]


class EvalRecordDocument(_Output):
    arch: str
    val_loss: float = Field(ge=0.0)
    seed: int


class SearchReportDocument(_Output):
    version: Literal[1]
    method: Literal["gbdt", "random"]
    seed: int
    best_arch: str
    best_val_loss: float = Field(ge=0.0)
    mean_val_loss: Optional[float]
    budget: Dict[str, int]
    initial_records: List[EvalRecordDocument]
    reevaluated_records: List[EvalRecordDocument]
    predicted: List[float]
    timings: Dict[str, float] = {}


class RunManifestDocument(_Output):
    version: Literal[1]
    command: str
    config_path: Optional[str]
    seed: int
    tool_version: str
    outputs: Dict[str, str]
    started_at: str
    finished_at: str
    exit_code: int


OUTPUT_DOCUMENTS: Dict[str, Type[BaseModel]] = {
    "cost_breakdown": CostBreakdownDocument,
    "baseline_comparison": BaselineComparisonDocument,
    "eval_record": EvalRecordDocument,
    "search_report": SearchReportDocument,
    "run_manifest": RunManifestDocument,
}


def validate_document(model: Type[T], data: Any, source: Optional[str] = None) -> T:
    """
    Validate `data` against a document model.

    Raises:
        ConfigDocumentError: Naming the first offending key (dotted path)
    """
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or None
        where = f"{source}: " if source else ""
        if first["type"] == "extra_forbidden":
            message = f"{where}unknown key '{key}'"
        else:
            message = f"{where}invalid value for '{key}': {first['msg']}"
        raise ConfigDocumentError(message, key=key, source=source) from None


JSON_SCHEMA_DIALECT = "https://json-schema.org/draft/2020-12/schema"


def output_schema(name: str) -> Dict[str, Any]:
    """
    JSON schema of an output document, generated from its pydantic model.

    Raises:
        KeyError: If `name` is not in OUTPUT_DOCUMENTS
    """
    return {"$schema": JSON_SCHEMA_DIALECT, **OUTPUT_DOCUMENTS[name].model_json_schema()}
