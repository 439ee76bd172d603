from .cce_did import (
    AttCell,
    AttTable,
    CceDidEstimator,
    CceDidResult,
    CceFit,
    FactorEstimate,
    FactorKind,
    ObservedFactor,
    att_table,
    estimate_factors,
    fit_pretreatment,
    impute_covariates,
    impute_outcomes,
    normal_quantile,
)
from .twfe import TwfeResult, TwfeSpec, event_dummies, twfe_event_study, two_way_demean

__all__ = [
    "AttCell",
    "AttTable",
    "CceDidEstimator",
    "CceDidResult",
    "CceFit",
    "FactorEstimate",
    "FactorKind",
    "ObservedFactor",
    "TwfeResult",
    "TwfeSpec",
    "att_table",
    "estimate_factors",
    "event_dummies",
    "fit_pretreatment",
    "impute_covariates",
    "impute_outcomes",
    "normal_quantile",
    "twfe_event_study",
    "two_way_demean",
]
