"""
C2ED2 - Two-Way Fixed Effects Event Study
Conventional DD baseline: unit and period effects plus one dummy per
post-treatment calendar period, optionally with the covariates.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from ..errors import CollinearityError, ConfigError
from ..numerics import collinear_columns, least_squares, rank_report
from ..panel.base import GroupIndex, PanelDataset
from .cce_did import normal_quantile


@dataclass(frozen=True)
class TwfeSpec:
    """
    include_covariates adds the m covariates to the design.
    method is "within" (two-way demeaning) or "dummies" (explicit unit and
    period dummies); both give the same event coefficients.
    """
    include_covariates: bool = False
    method: str = "within"

    def __post_init__(self):
        if self.method not in ("within", "dummies"):
            raise ConfigError(f"unknown TWFE method {self.method!r}")

    @property
    def name(self) -> str:
        return "ols_covariates" if self.include_covariates else "ols"


@dataclass(frozen=True)
class TwfeResult:
    """Event coefficients delta_t for t >= g_min with homoskedastic OLS errors"""
    periods: Tuple[int, ...]
    period_labels: Tuple[Any, ...]
    delta_hat: np.ndarray
    std_errors: np.ndarray
    beta_hat: np.ndarray
    beta_std_errors: np.ndarray
    sigma2: float
    dof: int
    method: str

    def coefficient(self, period: int) -> float:
        return float(self.delta_hat[self.periods.index(period)])

    def std_error(self, period: int) -> float:
        return float(self.std_errors[self.periods.index(period)])

    def ci(self, period: int, level: float = 0.95) -> Tuple[float, float]:
        z = normal_quantile(level)
        est, se = self.coefficient(period), self.std_error(period)
        return est - z * se, est + z * se

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "dof": self.dof,
            "sigma2": self.sigma2,
            "events": [
                {"period": t, "period_label": label, "delta_hat": float(d), "std_error": float(s)}
                for t, label, d, s in zip(self.periods, self.period_labels, self.delta_hat, self.std_errors)
            ],
            "beta_hat": self.beta_hat.tolist(),
        }


def event_dummies(data: PanelDataset, index: GroupIndex) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    N x T x P indicators, one per calendar period t >= g_min:
    1 when the unit is treated and already exposed in that period.
    """
    periods = tuple(range(index.g_min, data.n_periods + 1))
    start = index.group_of()
    t_grid = np.arange(1, data.n_periods + 1)

    exposed = (start[:, None] > 0) & (t_grid[None, :] >= start[:, None])
    D = np.zeros((data.n_units, data.n_periods, len(periods)))
    for j, t in enumerate(periods):
        D[:, t - 1, j] = exposed[:, t - 1]
    return D, periods


def two_way_demean(a: np.ndarray) -> np.ndarray:
    """a_it - a_i. - a_.t + a_.. over the first two axes (balanced panels)"""
    return a - a.mean(axis=1, keepdims=True) - a.mean(axis=0, keepdims=True) + a.mean(axis=(0, 1), keepdims=True)


def _inverse_gram(design: np.ndarray) -> np.ndarray:
    R = linalg.qr(design, mode="economic")[1]
    return linalg.cho_solve((R, False), np.eye(design.shape[1]))


def twfe_event_study(data: PanelDataset, index: GroupIndex, spec: TwfeSpec = TwfeSpec()) -> TwfeResult:
    """y_it = unit + period + sum_t delta_t D_it (+ beta' x_it) + e_it by least squares"""
    n, t = data.n_units, data.n_periods
    D, periods = event_dummies(data, index)

    blocks = [D]
    names: List[str] = [f"event[{data.period_label(s)}]" for s in periods]
    if spec.include_covariates and data.n_covariates:
        blocks.append(data.covariates)
        names += list(data.covariate_names)
    Z = np.concatenate(blocks, axis=2)
    q = Z.shape[2]

    if spec.method == "within":
        design = two_way_demean(Z).reshape(n * t, q)
        response = two_way_demean(data.outcomes).reshape(n * t)
        n_effects = n + t - 1
    else:
        unit_d = np.repeat(np.eye(n), t, axis=0)
        period_d = np.tile(np.eye(t), (n, 1))[:, 1:]
        design = np.hstack([unit_d, period_d, Z.reshape(n * t, q)])
        response = data.outcomes.reshape(n * t)
        names = [f"unit[{u}]" for u in data.unit_ids] + [
            f"period[{data.period_label(s)}]" for s in range(2, t + 1)
        ] + names
        n_effects = 0

    bad = collinear_columns(design)
    if bad:
        report = rank_report(design)
        raise CollinearityError(
            f"collinear TWFE design columns: {', '.join(names[j] for j in bad)}",
            columns=[names[j] for j in bad],
            effective_rank=report.rank,
            condition=report.condition,
        )

    coef = least_squares(design, response)
    resid = response - design @ coef
    dof = n * t - n_effects - design.shape[1]
    if dof <= 0:
        raise CollinearityError(f"no residual degrees of freedom ({dof})")
    sigma2 = float(resid @ resid / dof)
    se = np.sqrt(sigma2 * np.diag(_inverse_gram(design)))

    tail = slice(design.shape[1] - q, design.shape[1])
    coef, se = coef[tail], se[tail]
    P = len(periods)
    logger.debug(f"TWFE ({spec.method}, covariates={spec.include_covariates}): delta={np.round(coef[:P], 4).tolist()}")
    return TwfeResult(
        periods=periods,
        period_labels=tuple(data.period_label(s) for s in periods),
        delta_hat=coef[:P],
        std_errors=se[:P],
        beta_hat=coef[P:],
        beta_std_errors=se[P:],
        sigma2=sigma2,
        dof=dof,
        method=spec.method,
    )
