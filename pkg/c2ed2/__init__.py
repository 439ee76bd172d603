"""
C2ED2 - CCE difference-in-differences for fixed-T panels
with interactive fixed effects
"""

from loguru import logger

from .errors import C2ed2Error
from .estimators import CceDidEstimator, ObservedFactor, TwfeSpec, twfe_event_study
from .orchestration import EstimationOptions, EstimationPipeline
from .panel import PanelDataset, PanelSchema, ingest_csv, write_csv
from .simulation import DgpConfig, generate, run_study, summarize

__version__ = "0.1.0"

# Silent as a library until configure_logging is called
logger.disable("c2ed2")

__all__ = [
    "C2ed2Error",
    "CceDidEstimator",
    "DgpConfig",
    "EstimationOptions",
    "EstimationPipeline",
    "ObservedFactor",
    "PanelDataset",
    "PanelSchema",
    "TwfeSpec",
    "generate",
    "ingest_csv",
    "run_study",
    "summarize",
    "twfe_event_study",
    "write_csv",
]
