"""Parameter, MAC and real-time-factor accounting for TTS model configs."""

from .config import (
    CANNED_CONFIGS,
    ConvKind,
    MacsQuery,
    ModelConfig,
    PredictorSpec,
    fastspeech2_config,
    fastspeech2_small_config,
    lightspeech_config,
)
from .report import CONVENTIONS, ComponentCost, CostBreakdown, render_comparison, render_table
from .accounting import (
    analytic_mac_counts,
    analytic_param_counts,
    cost_report,
    model_macs,
    model_params,
    op_macs,
    op_params,
    predictor_savings,
)
from .instantiate import TTSModel, build_model, even_durations
from .profiler import profile

__all__ = [
    'CANNED_CONFIGS', 'ConvKind', 'MacsQuery', 'ModelConfig', 'PredictorSpec',
    'fastspeech2_config', 'fastspeech2_small_config', 'lightspeech_config',
    'CONVENTIONS', 'ComponentCost', 'CostBreakdown', 'render_comparison', 'render_table',
    'analytic_mac_counts', 'analytic_param_counts', 'cost_report', 'model_macs',
    'model_params', 'op_macs', 'op_params', 'predictor_savings',
    'TTSModel', 'build_model', 'even_durations', 'profile',
]
