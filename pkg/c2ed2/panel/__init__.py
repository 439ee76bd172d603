from .base import (
    GroupIndex,
    GroupLabel,
    PanelDataset,
    ValidationCheck,
    ValidationReport,
    build_group_index,
    required_pre_periods,
    validate_assumptions,
)
from .connectors import CsvConnector, PanelSchema, ingest_csv, write_csv

__all__ = [
    "CsvConnector",
    "GroupIndex",
    "GroupLabel",
    "PanelDataset",
    "PanelSchema",
    "ValidationCheck",
    "ValidationReport",
    "build_group_index",
    "ingest_csv",
    "required_pre_periods",
    "validate_assumptions",
    "write_csv",
]
