"""
Configuration: runtime settings, document schemas and config loading.
"""

from .settings import NasSettings
from .schemas import (
    OUTPUT_DOCUMENTS,
    BaselineComparisonDocument,
    ConfigDocumentError,
    CostBreakdownDocument,
    EvalRecordDocument,
    ModelConfigDocument,
    RunManifestDocument,
    SearchConfigDocument,
    SearchReportDocument,
    SpaceDocument,
    output_schema,
    validate_document,
)
from .loader import load_model_config, load_search_config, load_space, resolve_config_path

__all__ = [
    'NasSettings', 'OUTPUT_DOCUMENTS', 'BaselineComparisonDocument', 'ConfigDocumentError',
    'CostBreakdownDocument', 'EvalRecordDocument', 'ModelConfigDocument', 'RunManifestDocument',
    'SearchConfigDocument', 'SearchReportDocument', 'SpaceDocument', 'output_schema', 'validate_document',
    'load_model_config', 'load_search_config', 'load_space', 'resolve_config_path',
]
