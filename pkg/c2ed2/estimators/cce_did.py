"""
C2ED2 - CCE Difference-in-Differences Estimator
Counterfactual imputation in four steps:
  1. factor proxies from never-treated cross-sectional averages
  2. pooled slope and per-unit loadings on the pre-treatment window
  3. untreated covariates for treated units
  4. untreated outcomes for treated units
followed by group-time ATTs, their direct/indirect split and
non-parametric variances.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg, stats

from ..errors import (
    ConfigError,
    DegenerateGroupError,
    FactorRankError,
    PanelValidationError,
    SlopeRankError,
)
from ..numerics import Annihilator, least_squares, rank_report
from ..panel.base import GroupIndex, PanelDataset


class FactorKind(Enum):
    """Origin of a factor column"""
    AVERAGE = "average"
    CONSTANT = "constant"
    TREND = "trend"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ObservedFactor:
    """Known factor appended after the cross-sectional averages"""
    kind: FactorKind
    values: Tuple[float, ...] = ()
    name: str = ""

    @classmethod
    def constant(cls) -> "ObservedFactor":
        return cls(FactorKind.CONSTANT, name="constant")

    @classmethod
    def trend(cls) -> "ObservedFactor":
        return cls(FactorKind.TREND, name="trend")

    @classmethod
    def custom(cls, values: Sequence[float], name: str = "custom") -> "ObservedFactor":
        return cls(FactorKind.CUSTOM, tuple(float(v) for v in values), name)

    def column(self, n_periods: int) -> np.ndarray:
        """Length-T series for this factor"""
        if self.kind == FactorKind.CONSTANT:
            return np.ones(n_periods)
        if self.kind == FactorKind.TREND:
            return np.arange(1, n_periods + 1, dtype=float)
        if self.kind == FactorKind.CUSTOM:
            if len(self.values) != n_periods:
                raise ConfigError(
                    f"observed factor '{self.name}' has {len(self.values)} values, "
                    f"panel has T={n_periods}"
                )
            return np.asarray(self.values, dtype=float)
        raise ConfigError(f"cannot build an observed factor of kind {self.kind}")


@dataclass(frozen=True)
class FactorEstimate:
    """T x k factor proxies; the first m+1 columns are averages over I_inf"""
    values: np.ndarray
    kinds: Tuple[FactorKind, ...]
    names: Tuple[str, ...]

    @property
    def n_factors(self) -> int:
        return self.values.shape[1]

    @property
    def n_observed(self) -> int:
        return sum(k != FactorKind.AVERAGE for k in self.kinds)

    def window(self, stop: int) -> np.ndarray:
        """Rows for periods 1..stop"""
        return self.values[:stop]


def estimate_factors(
    data: PanelDataset,
    index: GroupIndex,
    observed: Sequence[ObservedFactor] = (),
) -> FactorEstimate:
    """
    Step 1: f_t = mean over never-treated units of z_it = (y_it, x_it')',
    for every period, with observed factors appended.
    """
    if not index.never_treated:
        raise PanelValidationError("empty control set: factor proxies need never-treated units")

    never = list(index.never_treated)
    z = np.concatenate([data.outcomes[never][:, :, None], data.covariates[never]], axis=2)
    averages = z.mean(axis=0)

    columns = [averages]
    kinds = [FactorKind.AVERAGE] * averages.shape[1]
    names = [f"mean({data.outcome_name})"] + [f"mean({c})" for c in data.covariate_names]

    for spec in observed:
        columns.append(spec.column(data.n_periods)[:, None])
        kinds.append(spec.kind)
        names.append(spec.name or spec.kind.value)

    values = np.concatenate(columns, axis=1)
    values.setflags(write=False)
    return FactorEstimate(values, tuple(kinds), tuple(names))


@dataclass(frozen=True)
class CceFit:
    """Step-2/3 estimates over the pre-treatment window 1..g_min-1"""
    beta_hat: np.ndarray
    loadings_a: np.ndarray
    loadings_lambda: np.ndarray
    pre_window: Tuple[int, int]
    beta_hat_by_group: Mapping[int, np.ndarray] = field(default_factory=dict)
    diagnostics: Mapping[str, float] = field(default_factory=dict)
    beta_cov: Optional[np.ndarray] = None
    beta_cov_by_group: Mapping[int, np.ndarray] = field(default_factory=dict)

    @property
    def n_covariates(self) -> int:
        return self.beta_hat.shape[0]

    def beta_for(self, g: Optional[int]) -> np.ndarray:
        """Slope used for group g (pooled unless estimated group-wise)"""
        if g is not None and g in self.beta_hat_by_group:
            return self.beta_hat_by_group[g]
        return self.beta_hat

    def beta_se(self, g: Optional[int] = None) -> Optional[np.ndarray]:
        """Standard errors of the slope used for group g"""
        if g is not None and g in self.beta_hat_by_group:
            cov = self.beta_cov_by_group.get(g)
        else:
            cov = self.beta_cov
        if cov is None:
            return None
        return np.sqrt(np.clip(np.diag(cov), 0.0, None))

    def beta_ci(self, level: float = 0.95, g: Optional[int] = None):
        """Normal confidence bounds (lower, upper) for the slope of group g"""
        se = self.beta_se(g)
        if se is None:
            return None, None
        beta = self.beta_for(g)
        z = normal_quantile(level)
        return beta - z * se, beta + z * se

    def unit_beta(self, index: GroupIndex) -> np.ndarray:
        """N x m slopes, one row per unit"""
        return _unit_beta(self.beta_hat, self.beta_hat_by_group, index)


def _unit_beta(beta: np.ndarray, by_group: Mapping[int, np.ndarray], index: GroupIndex) -> np.ndarray:
    out = np.tile(beta, (index.n_units, 1))
    for g, beta_g in by_group.items():
        out[list(index.members[g])] = beta_g
    return out


def _slope(design: np.ndarray, response: np.ndarray, label: str) -> Tuple[np.ndarray, float]:
    report = rank_report(design)
    if report.rank < design.shape[1]:
        raise SlopeRankError(
            f"sum of x_i' M_f x_i is singular{label}: rank {report.rank} of "
            f"{design.shape[1]} (condition {report.condition ** 2:.3g})",
            effective_rank=report.rank,
            condition=report.condition ** 2,
        )
    return least_squares(design, response), report.condition ** 2


def _slope_covariance(
    design: np.ndarray,
    response: np.ndarray,
    beta: np.ndarray,
    n_units: int,
) -> Optional[np.ndarray]:
    """
    Unit-clustered sandwich for the pooled slope:
    (sum x_i'M x_i)^-1 [N/(N-1) sum (x_i'M u_i)(x_i'M u_i)'] (sum x_i'M x_i)^-1
    with u_i the annihilated pre-window residuals. None with a single unit.
    """
    if n_units < 2:
        return None
    m = design.shape[1]
    blocks = design.reshape(n_units, -1, m)
    resid = (response - design @ beta).reshape(n_units, -1)
    scores = np.einsum("npm,np->nm", blocks, resid)
    bread = linalg.inv(design.T @ design)
    meat = scores.T @ scores * n_units / (n_units - 1)
    cov = bread @ meat @ bread
    return (cov + cov.T) / 2.0


def fit_pretreatment(
    data: PanelDataset,
    index: GroupIndex,
    factors: FactorEstimate,
    groupwise_beta: bool = False,
) -> CceFit:
    """
    Step 2: beta by pooled CCE over all N units, a_i by unit-wise OLS of
    y_i - x_i beta on f. Step 3 loadings: lambda_i by unit-wise OLS of x_i on f.
    """
    p = index.g_min - 1
    n, m = data.n_units, data.n_covariates
    k = factors.n_factors

    need = k + 1 if m else k
    if p < need:
        raise PanelValidationError(
            f"pre-treatment window has {p} periods; {need} needed with k={k} factors "
            f"and m={m} covariates"
        )

    F = factors.window(p)
    f_report = rank_report(F)
    if f_report.rank < k:
        raise FactorRankError(
            f"f'f is singular over periods 1..{p}: rank {f_report.rank} of {k} "
            f"(condition {f_report.condition ** 2:.3g})",
            effective_rank=f_report.rank,
            condition=f_report.condition ** 2,
        )
    diagnostics: Dict[str, float] = {"factor_gram_condition": f_report.condition ** 2}

    Y = data.outcomes[:, :p].T                       # p x N
    X = data.covariates[:, :p, :].transpose(1, 0, 2)  # p x N x m

    beta = np.zeros(m)
    beta_cov: Optional[np.ndarray] = np.zeros((0, 0))
    by_group: Dict[int, np.ndarray] = {}
    cov_by_group: Dict[int, np.ndarray] = {}
    if m:
        M = Annihilator.from_matrix(F)
        MX = M.apply(X.reshape(p, n * m)).reshape(p, n, m)
        MY = M.apply(Y)

        def stacked(units):
            design = MX[:, units, :].transpose(1, 0, 2).reshape(-1, m)
            response = MY[:, units].T.reshape(-1)
            return design, response

        design, response = stacked(slice(None))
        beta, diagnostics["slope_gram_condition"] = _slope(design, response, "")
        beta_cov = _slope_covariance(design, response, beta, n)
        if groupwise_beta:
            for g in index.groups:
                units = list(index.members[g])
                design, response = stacked(units)
                by_group[g], diagnostics[f"slope_gram_condition_g{g}"] = _slope(
                    design, response, f" for group {g}"
                )
                cov = _slope_covariance(design, response, by_group[g], len(units))
                if cov is not None:
                    cov_by_group[g] = cov

    unit_beta = _unit_beta(beta, by_group, index)
    resid = Y - np.einsum("pnm,nm->pn", X, unit_beta)
    a = least_squares(F, resid).T
    lam = least_squares(F, X.reshape(p, n * m)).reshape(k, n, m).transpose(1, 0, 2)

    logger.debug(f"Pre-treatment fit on periods 1..{p}: beta={np.round(beta, 4).tolist()}")
    return CceFit(
        beta_hat=beta,
        loadings_a=a,
        loadings_lambda=lam,
        pre_window=(1, p),
        beta_hat_by_group=by_group,
        diagnostics=diagnostics,
        beta_cov=beta_cov,
        beta_cov_by_group=cov_by_group,
    )


def impute_covariates(fit: CceFit, factors: FactorEstimate, index: GroupIndex) -> np.ndarray:
    """
    Step 3: x_it(inf) = lambda_i' f_t as an N x T x m array.
    Treated post-treatment cells are the imputations; the remaining cells
    are in-sample fitted values, used only for placebo rows.
    """
    if fit.loadings_lambda.shape[0] != index.n_units:
        raise ValueError("fit and index describe different panels")
    return np.einsum("tk,nkm->ntm", factors.values, fit.loadings_lambda)


def impute_outcomes(
    fit: CceFit,
    factors: FactorEstimate,
    covariates: np.ndarray,
    index: GroupIndex,
) -> np.ndarray:
    """
    Step 4: y_it(inf) = beta' x_it + a_i' f_t as an N x T array.
    covariates is normally the step-3 imputation; passing the observed
    covariates instead gives the counterfactual that only nets out the
    direct effect.
    """
    unit_beta = fit.unit_beta(index)
    return np.einsum("ntm,nm->nt", covariates, unit_beta) + fit.loadings_a @ factors.values.T


# ATT table

_NORMAL = stats.norm


def normal_quantile(level: float) -> float:
    """Two-sided critical value for a confidence level"""
    return float(_NORMAL.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class AttCell:
    """
    One (g, t) row. Variances are per-unit dispersions; the standard
    error of each estimate is sqrt(variance / group_size).
    """
    group: int
    period: int
    period_label: Any
    delta_hat: float
    tau_hat: Tuple[float, ...]
    indirect_hat: float
    eta_hat: float
    group_size: int
    var_delta: Optional[float] = None
    var_tau: Optional[Tuple[Tuple[float, ...], ...]] = None
    var_indirect: Optional[float] = None
    var_eta: Optional[float] = None
    placebo: bool = False
    window: Optional[str] = None

    @property
    def event_time(self) -> int:
        return self.period - self.group

    def estimate(self, target: str) -> float:
        return {"total": self.delta_hat, "direct": self.eta_hat, "indirect": self.indirect_hat}[target]

    def variance(self, target: str) -> Optional[float]:
        return {"total": self.var_delta, "direct": self.var_eta, "indirect": self.var_indirect}[target]

    def std_error(self, target: str = "total") -> Optional[float]:
        var = self.variance(target)
        if var is None:
            return None
        return float(np.sqrt(var / self.group_size))

    def ci(self, target: str = "total", level: float = 0.95) -> Tuple[Optional[float], Optional[float]]:
        se = self.std_error(target)
        if se is None:
            return None, None
        z = normal_quantile(level)
        est = self.estimate(target)
        return est - z * se, est + z * se

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group": self.group,
            "period": self.period,
            "period_label": self.period_label,
            "placebo": self.placebo,
            "window": self.window,
            "group_size": self.group_size,
            "delta_hat": self.delta_hat,
            "tau_hat": list(self.tau_hat),
            "indirect_hat": self.indirect_hat,
            "eta_hat": self.eta_hat,
            "var_delta": self.var_delta,
            "var_tau": [list(r) for r in self.var_tau] if self.var_tau is not None else None,
            "var_indirect": self.var_indirect,
            "var_eta": self.var_eta,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AttCell":
        var_tau = d.get("var_tau")
        return cls(
            group=int(d["group"]),
            period=int(d["period"]),
            period_label=d["period_label"],
            delta_hat=d["delta_hat"],
            tau_hat=tuple(d["tau_hat"]),
            indirect_hat=d["indirect_hat"],
            eta_hat=d["eta_hat"],
            group_size=int(d["group_size"]),
            var_delta=d.get("var_delta"),
            var_tau=tuple(tuple(r) for r in var_tau) if var_tau is not None else None,
            var_indirect=d.get("var_indirect"),
            var_eta=d.get("var_eta"),
            placebo=bool(d.get("placebo", False)),
            window=d.get("window"),
        )


@dataclass(frozen=True)
class AttTable:
    """Group-time ATT rows plus optional pre/post window averages"""
    cells: Tuple[AttCell, ...]
    averages: Tuple[AttCell, ...] = ()
    level: float = 0.95

    def cell(self, group: int, period: int) -> AttCell:
        for c in self.cells:
            if c.group == group and c.period == period:
                return c
        raise KeyError((group, period))

    def post_cells(self) -> List[AttCell]:
        return [c for c in self.cells if not c.placebo]

    def placebo_cells(self) -> List[AttCell]:
        return [c for c in self.cells if c.placebo]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "cells": [c.to_dict() for c in self.cells],
            "averages": [c.to_dict() for c in self.averages],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AttTable":
        return cls(
            cells=tuple(AttCell.from_dict(c) for c in d["cells"]),
            averages=tuple(AttCell.from_dict(c) for c in d.get("averages", ())),
            level=float(d.get("level", 0.95)),
        )


def _summarize_units(
    group: int,
    period: int,
    period_label: Any,
    effects: np.ndarray,
    tau: np.ndarray,
    beta: np.ndarray,
    with_variance: bool,
    placebo: bool = False,
    window: Optional[str] = None,
) -> AttCell:
    """Average per-unit effects (length n) and covariate shifts (n x m)"""
    n, m = tau.shape
    delta = float(effects.mean())
    tau_bar = tau.mean(axis=0)
    indirect = float(tau_bar @ beta)
    eta_units = effects - tau @ beta

    cell = dict(
        group=group,
        period=period,
        period_label=period_label,
        delta_hat=delta,
        tau_hat=tuple(float(v) for v in tau_bar),
        indirect_hat=indirect,
        eta_hat=delta - indirect,
        group_size=n,
        placebo=placebo,
        window=window,
    )
    if with_variance:
        if n < 2:
            raise DegenerateGroupError(group)
        sigma_tau = np.cov(tau, rowvar=False, ddof=1).reshape(m, m) if m else np.zeros((0, 0))
        cell.update(
            var_delta=float(effects.var(ddof=1)),
            var_tau=tuple(tuple(float(v) for v in row) for row in sigma_tau),
            var_indirect=max(float(beta @ sigma_tau @ beta), 0.0) if m else 0.0,
            var_eta=float(eta_units.var(ddof=1)),
        )
    return AttCell(**cell)


def att_table(
    data: PanelDataset,
    index: GroupIndex,
    fit: CceFit,
    factors: FactorEstimate,
    covariates_hat: np.ndarray,
    outcomes_hat: np.ndarray,
    placebo: bool = False,
    averages: bool = False,
    with_variance: bool = True,
    level: float = 0.95,
    skip_degenerate: bool = False,
) -> AttTable:
    """
    Delta_{g,t} = mean over I_g of y_it - y_it(inf) for every t >= g,
    tau_{g,t} = mean of x_it - x_it(inf), indirect = tau' beta_g,
    direct = Delta - indirect. Placebo rows repeat the formulas for t < g.
    skip_degenerate leaves single-unit groups without variances instead of raising.
    """
    effects = data.outcomes - outcomes_hat
    shifts = data.covariates - covariates_hat

    cells: List[AttCell] = []
    window_rows: List[AttCell] = []
    for g in index.groups:
        units = list(index.members[g])
        beta = fit.beta_for(g)
        first = 1 if placebo else g
        variance = with_variance and not (skip_degenerate and len(units) < 2)

        for t in range(first, data.n_periods + 1):
            cells.append(_summarize_units(
                g, t, data.period_label(t),
                effects[units, t - 1], shifts[units, t - 1], beta,
                variance, placebo=t < g,
            ))

        if averages:
            windows = [("post", range(g, data.n_periods + 1))]
            if g > 1:
                windows.insert(0, ("pre", range(1, g)))
            for name, periods in windows:
                cols = [t - 1 for t in periods]
                window_rows.append(_summarize_units(
                    g, periods[0], name,
                    effects[units][:, cols].mean(axis=1),
                    shifts[units][:, cols, :].mean(axis=1),
                    beta, variance, placebo=name == "pre", window=name,
                ))

    return AttTable(tuple(cells), tuple(window_rows), level)


# Estimator facade

@dataclass(frozen=True)
class CceDidResult:
    """Everything the four steps produce for one panel"""
    index: GroupIndex
    factors: FactorEstimate
    fit: CceFit
    covariates_hat: np.ndarray
    outcomes_hat: np.ndarray
    table: AttTable


class CceDidEstimator:
    """
    C2ED2 estimator
    Runs the four imputation steps and builds the ATT table
    """

    name = "c2ed2"

    def __init__(
        self,
        observed: Sequence[ObservedFactor] = (),
        groupwise_beta: bool = False,
        placebo: bool = False,
        averages: bool = False,
        level: float = 0.95,
        skip_degenerate: bool = False,
    ):
        self.observed = tuple(observed)
        self.groupwise_beta = groupwise_beta
        self.placebo = placebo
        self.averages = averages
        self.level = level
        self.skip_degenerate = skip_degenerate

    def estimate(self, data: PanelDataset, index: GroupIndex) -> CceDidResult:
        """Steps 1-4 then the ATT table"""
        logger.debug("Step 1/4: factor proxies from never-treated averages")
        factors = estimate_factors(data, index, self.observed)

        logger.debug("Step 2/4: slope and loadings on the pre-treatment window")
        fit = fit_pretreatment(data, index, factors, self.groupwise_beta)

        logger.debug("Step 3/4: imputing untreated covariates")
        covariates_hat = impute_covariates(fit, factors, index)

        logger.debug("Step 4/4: imputing untreated outcomes")
        outcomes_hat = impute_outcomes(fit, factors, covariates_hat, index)

        table = att_table(
            data, index, fit, factors, covariates_hat, outcomes_hat,
            placebo=self.placebo, averages=self.averages, level=self.level,
            skip_degenerate=self.skip_degenerate,
        )
        return CceDidResult(index, factors, fit, covariates_hat, outcomes_hat, table)
