"""
C2ED2 - Monte Carlo Study Manager
Runs replications of the simulation design, scores every estimator
against the known truths and aggregates bias, MSE and CI coverage.
"""

import io
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from ..errors import C2ed2Error, ConfigError
from ..estimators import CceDidEstimator, TwfeSpec, twfe_event_study
from ..panel.base import build_group_index
from .dgp import DgpConfig, generate

ESTIMATORS = ("ols", "ols_covariates", "c2ed2")
TARGETS = ("total", "direct", "indirect")

ESTIMATOR_LABELS = {
    "ols": "OLS",
    "ols_covariates": "OLS with covariates",
    "c2ed2": "C2ED2",
}


@dataclass(frozen=True)
class Scenario:
    """Effect sizes of one column block of the results table"""
    name: str
    label: str
    delta_g: float
    tau_g: Tuple[float, float]


SCENARIOS: Dict[str, Scenario] = {
    "direct_only": Scenario("direct_only", "Direct effect only", 1.0, (0.0, 0.0)),
    "direct_indirect": Scenario("direct_indirect", "Direct and indirect effects", 2.0, (0.0, 1.0)),
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "table1": {
        "theta": (0.0, 0.0),
        "caption": "Monte Carlo results when trends are parallel",
    },
    "table2": {
        "theta": (0.0, 1.0),
        "caption": "Monte Carlo results when trends are not parallel",
    },
}


def preset_configs(preset: str, base: Optional[DgpConfig] = None) -> List[Tuple[Scenario, DgpConfig]]:
    """One DgpConfig per effect scenario of a named preset"""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
    base = base or DgpConfig()
    theta = PRESETS[preset]["theta"]
    return [
        (s, base.model_copy(update={"theta": theta, "delta_g": s.delta_g, "tau_g": s.tau_g}))
        for s in SCENARIOS.values()
    ]


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent substream for replication rep, derived from (seed, rep) only"""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))


# Per-replication records

@dataclass(frozen=True)
class ReplicationRecord:
    """
    Estimates of one replication.
    estimates[estimator] is a P x 3 x 3 array (period, target, [estimate, lower, upper]),
    NaN where an estimator does not report a target.
    """
    rep: int
    estimates: Mapping[str, np.ndarray]
    failures: Mapping[str, str] = field(default_factory=dict)


def _score_c2ed2(data, index, periods: Sequence[int], level: float) -> np.ndarray:
    result = CceDidEstimator(level=level).estimate(data, index)
    g = index.g_min
    out = np.full((len(periods), len(TARGETS), 3), np.nan)
    for j, t in enumerate(periods):
        cell = result.table.cell(g, t)
        for k, target in enumerate(TARGETS):
            lo, hi = cell.ci(target, level)
            out[j, k] = (cell.estimate(target), lo, hi)
    return out


def _score_twfe(data, index, periods: Sequence[int], level: float, covariates: bool) -> np.ndarray:
    fit = twfe_event_study(data, index, TwfeSpec(include_covariates=covariates))
    out = np.full((len(periods), len(TARGETS), 3), np.nan)
    for j, t in enumerate(periods):
        lo, hi = fit.ci(t, level)
        out[j, 0] = (fit.coefficient(t), lo, hi)
    return out


def run_replication(
    config: DgpConfig,
    rep: int,
    estimators: Sequence[str] = ESTIMATORS,
    level: float = 0.95,
) -> ReplicationRecord:
    """Generate one panel and run every estimator on it"""
    panel = generate(config, replication_rng(config.seed, rep))
    index = build_group_index(panel.data)
    periods = config.post_periods()

    estimates: Dict[str, np.ndarray] = {}
    failures: Dict[str, str] = {}
    for name in estimators:
        try:
            if name == "c2ed2":
                estimates[name] = _score_c2ed2(panel.data, index, periods, level)
            else:
                estimates[name] = _score_twfe(
                    panel.data, index, periods, level, covariates=name == "ols_covariates"
                )
        except (C2ed2Error, np.linalg.LinAlgError) as e:
            failures[name] = str(e)
            logger.debug(f"Replication {rep}: {name} failed: {e}")
    return ReplicationRecord(rep, estimates, failures)


# Aggregation

@dataclass(frozen=True)
class McCell:
    """Bias, MSE and coverage of one estimator x target x period"""
    estimator: str
    target: str
    period: int
    truth: float
    bias: float
    mse: float
    coverage: float
    mc_se: Optional[float]
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimator": self.estimator,
            "target": self.target,
            "period": self.period,
            "truth": self.truth,
            "bias": self.bias,
            "mse": self.mse,
            "coverage": self.coverage,
            "mc_se": self.mc_se,
            "n": self.n,
        }


@dataclass(frozen=True)
class McReport:
    """Aggregated study results for one scenario"""
    scenario: str
    label: str
    config: Mapping[str, Any]
    seed: int
    n_replications: int
    estimators: Tuple[str, ...]
    periods: Tuple[int, ...]
    cells: Tuple[McCell, ...]
    failures: Mapping[str, int] = field(default_factory=dict)
    level: float = 0.95

    def cell(self, estimator: str, period: int, target: str = "total") -> McCell:
        for c in self.cells:
            if (c.estimator, c.period, c.target) == (estimator, period, target):
                return c
        raise KeyError((estimator, period, target))

    def to_frame(self) -> pd.DataFrame:
        rows = [dict(scenario=self.scenario, **c.to_dict()) for c in self.cells]
        return pd.DataFrame(rows)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "label": self.label,
            "config": dict(self.config),
            "seed": self.seed,
            "n_replications": self.n_replications,
            "estimators": list(self.estimators),
            "periods": list(self.periods),
            "level": self.level,
            "failures": dict(self.failures),
            "cells": [c.to_dict() for c in self.cells],
        }


def _aggregate(
    records: Sequence[ReplicationRecord],
    config: DgpConfig,
    estimators: Sequence[str],
) -> Tuple[List[McCell], Dict[str, int]]:
    truths = config.truths()
    periods = config.post_periods()
    cells: List[McCell] = []
    failures: Dict[str, int] = {}

    for name in estimators:
        ok = [r.estimates[name] for r in records if name in r.estimates]
        failures[name] = len(records) - len(ok)
        if not ok:
            continue
        stacked = np.stack(ok)  # R x P x targets x 3
        for k, target in enumerate(TARGETS):
            if np.all(np.isnan(stacked[:, :, k, 0])):
                continue
            truth = truths[target]
            for j, t in enumerate(periods):
                est, lo, hi = stacked[:, j, k, 0], stacked[:, j, k, 1], stacked[:, j, k, 2]
                err = est - truth
                n = err.size
                cells.append(McCell(
                    estimator=name,
                    target=target,
                    period=t,
                    truth=truth,
                    bias=float(err.mean()),
                    mse=float(np.mean(err ** 2)),
                    coverage=float(np.mean((lo <= truth) & (truth <= hi))),
                    mc_se=float(err.std(ddof=1) / np.sqrt(n)) if n > 1 else None,
                    n=n,
                ))
    return cells, failures


def run_study(
    config: DgpConfig,
    estimators: Sequence[str] = ESTIMATORS,
    n_reps: int = 1000,
    n_jobs: int = 1,
    scenario: Optional[Scenario] = None,
    level: float = 0.95,
) -> McReport:
    """
    Run n_reps replications and aggregate them.
    Each replication draws from its own (seed, rep) substream and records are
    reduced in replication order, so n_jobs never changes the result.
    """
    if n_reps < 1:
        raise ConfigError(f"n_reps must be at least 1, got {n_reps}")
    if not 0.0 < level < 1.0:
        raise ConfigError(f"confidence level must lie in (0, 1), got {level}")
    unknown = [e for e in estimators if e not in ESTIMATORS]
    if unknown:
        raise ConfigError(f"unknown estimators: {', '.join(unknown)}")

    name = scenario.name if scenario else "custom"
    logger.info(f"Monte Carlo '{name}': {n_reps} replications, {n_jobs} thread(s), seed={config.seed}")

    records = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(run_replication)(config, rep, tuple(estimators), level) for rep in range(n_reps)
    )
    records = sorted(records, key=lambda r: r.rep)
    cells, failures = _aggregate(records, config, estimators)

    for est, count in failures.items():
        if count:
            logger.warning(f"{est}: {count} of {n_reps} replications failed and were excluded")

    return McReport(
        scenario=name,
        label=scenario.label if scenario else "Custom scenario",
        config=config.model_dump(mode="json"),
        seed=config.seed,
        n_replications=n_reps,
        estimators=tuple(estimators),
        periods=config.post_periods(),
        cells=tuple(cells),
        failures=failures,
        level=level,
    )


# Tables

def table_frame(reports: Sequence[McReport], coverage: bool = False) -> pd.DataFrame:
    """
    One row per scenario x estimator, BIAS/MSE columns per post period.
    COV columns (total ATT coverage) are extra and only added on request.
    """
    if not reports:
        raise ConfigError("nothing to summarize: no reports")

    rows = []
    for report in reports:
        for est in report.estimators:
            row: Dict[str, Any] = {
                "scenario": report.scenario,
                "estimator": ESTIMATOR_LABELS.get(est, est),
            }
            stats = ["BIAS", "MSE"] + (["COV"] if coverage else [])
            for stat in stats:
                for t in report.periods:
                    try:
                        c = report.cell(est, t, "total")
                    except KeyError:
                        value = np.nan
                    else:
                        value = {"BIAS": c.bias, "MSE": c.mse, "COV": c.coverage}[stat]
                    row[f"{stat}(D{t})"] = value
            rows.append(row)
    return pd.DataFrame(rows)


def _text_table(frame: pd.DataFrame, reports: Sequence[McReport]) -> str:
    value_cols = [c for c in frame.columns if c not in ("scenario", "estimator")]
    name_width = max(len("estimator"), *(len(e) for e in frame["estimator"]))
    width = max(10, *(len(c) for c in value_cols))

    lines = []
    header = f"{'estimator':<{name_width}}" + "".join(f"{c:>{width + 1}}" for c in value_cols)
    for report in reports:
        lines.append(f"{report.label} (R={report.n_replications}, seed={report.seed})")
        lines.append(header)
        block = frame[frame["scenario"] == report.scenario]
        for _, row in block.iterrows():
            values = "".join(
                f"{'n/a' if pd.isna(row[c]) else format(row[c], '.4f'):>{width + 1}}"
                for c in value_cols
            )
            lines.append(f"{row['estimator']:<{name_width}}{values}")
        failed = {k: v for k, v in report.failures.items() if v}
        if failed:
            lines.append("failed replications: " + ", ".join(f"{k}={v}" for k, v in failed.items()))
        lines.append("")
    if any(c.startswith("COV(") for c in value_cols):
        levels = ", ".join(f"{level * 100:g}%" for level in sorted({r.level for r in reports}))
        lines.append(f"COV columns: empirical {levels} CI coverage of the total ATT (extra)")
    return "\n".join(lines).rstrip("\n") + "\n"


def summarize(reports: Sequence[McReport], fmt: str = "text", coverage: bool = False) -> str:
    """Render reports in the results-table layout as aligned text or CSV"""
    frame = table_frame(reports, coverage)
    if fmt == "csv":
        buf = io.StringIO()
        frame.to_csv(buf, index=False, float_format="%.6f", lineterminator="\n")
        return buf.getvalue()
    if fmt == "text":
        return _text_table(frame, reports)
    raise ConfigError(f"unknown summary format {fmt!r}")
