"""
C2ED2 - Estimation Pipeline
Master coordinator: ingest, index, validate, then the four estimation steps
"""

import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

from ..errors import AssumptionError, C2ed2Error
from ..estimators import AttTable, CceDidEstimator, CceDidResult, ObservedFactor
from ..panel import (
    GroupIndex,
    PanelDataset,
    PanelSchema,
    ValidationReport,
    build_group_index,
    ingest_csv,
    validate_assumptions,
)


@dataclass(frozen=True)
class EstimationOptions:
    """Estimator switches for one pipeline run"""
    observed: Sequence[ObservedFactor] = ()
    groupwise_beta: bool = False
    placebo: bool = True
    averages: bool = True
    level: float = 0.95
    force: bool = False


@dataclass(frozen=True)
class EstimationRun:
    """Result of a completed pipeline run"""
    data: PanelDataset
    index: GroupIndex
    report: ValidationReport
    result: CceDidResult
    elapsed: float

    @property
    def table(self) -> AttTable:
        return self.result.table

    def diagnostics(self) -> Dict[str, Any]:
        """JSON-ready block: panel shape, group sizes, slope inference, validation flags"""
        fit = self.result.fit
        out = {
            "panel": self.data.summary(),
            "groups": self.index.to_dict(),
            "factors": list(self.result.factors.names),
            "covariates": list(self.data.covariate_names),
            "beta_hat": _floats(fit.beta_hat),
            "beta_se": _floats(fit.beta_se()),
            "beta_ci": _interval(fit.beta_ci(self.table.level)),
            "pre_window": list(fit.pre_window),
            "validation": self.report.to_dict(),
        }
        if fit.beta_hat_by_group:
            out["beta_hat_by_group"] = {
                str(g): {
                    "beta_hat": _floats(fit.beta_for(g)),
                    "beta_se": _floats(fit.beta_se(g)),
                    "beta_ci": _interval(fit.beta_ci(self.table.level, g)),
                }
                for g in sorted(fit.beta_hat_by_group)
            }
        return out


def _floats(values) -> Optional[List[float]]:
    return None if values is None else [float(v) for v in values]


def _interval(bounds) -> Optional[Dict[str, List[float]]]:
    lower, upper = bounds
    if lower is None:
        return None
    return {"lower": _floats(lower), "upper": _floats(upper)}


class EstimationPipeline:
    """
    Pipeline Orchestrator
    Runs validation and the C2ED2 steps in order, keeping run counters
    """

    def __init__(self, options: Optional[EstimationOptions] = None):
        self.options = options or EstimationOptions()
        self.estimator = CceDidEstimator(
            observed=self.options.observed,
            groupwise_beta=self.options.groupwise_beta,
            placebo=self.options.placebo,
            averages=self.options.averages,
            level=self.options.level,
            skip_degenerate=self.options.force,
        )
        self.runs_completed = 0
        self.runs_failed = 0

    def validate(self, data: PanelDataset, index: GroupIndex) -> ValidationReport:
        """Runtime checks; failures abort unless force is set"""
        report = validate_assumptions(data, index, k_observed=len(self.options.observed))

        for check in report.warnings:
            logger.warning(f"{check.name}: {check.message}")

        if not report.passed:
            summary = "; ".join(f"{c.name}: {c.message}" for c in report.failures)
            if not self.options.force:
                raise AssumptionError(f"validation failed: {summary}", report=report)
            logger.warning(f"validation failed, continuing because of --force: {summary}")
        return report

    def run(self, data: PanelDataset) -> EstimationRun:
        """index -> validate -> factors -> fit -> imputations -> ATT table"""
        start = time.perf_counter()
        logger.info(
            f"Estimating on N={data.n_units}, T={data.n_periods}, m={data.n_covariates}"
        )
        try:
            index = build_group_index(data)
            report = self.validate(data, index)
            result = self.estimator.estimate(data, index)
        except C2ed2Error as e:
            self.runs_failed += 1
            logger.error(f"Estimation failed: {e}")
            raise

        report = report.with_diagnostics(result.fit.diagnostics)
        self.runs_completed += 1
        elapsed = time.perf_counter() - start
        logger.info(f"Estimation completed in {elapsed:.2f}s ({len(result.table.cells)} cells)")
        return EstimationRun(data, index, report, result, elapsed)

    def run_file(self, path, schema: PanelSchema) -> EstimationRun:
        """Ingest a long-format CSV then run"""
        logger.info(f"Reading panel from {path}")
        try:
            data = ingest_csv(path, schema)
        except C2ed2Error:
            self.runs_failed += 1
            raise
        return self.run(data)

    def get_stats(self) -> Dict[str, Any]:
        return {
            "runs_completed": self.runs_completed,
            "runs_failed": self.runs_failed,
            "groupwise_beta": self.options.groupwise_beta,
            "observed_factors": [f.name for f in self.options.observed],
        }
