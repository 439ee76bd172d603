"""
C2ED2 - Panel Base Types
Balanced fixed-T panels with absorbing-state treatment groups
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import PanelValidationError

NEVER_TREATED = 0


@dataclass(frozen=True, order=True)
class GroupLabel:
    """
    Treatment timing of one unit.
    period is the 1-based first treated period, None for never-treated.
    Treatment is absorbing: treated for every t >= period.
    """
    period: Optional[int] = None

    @classmethod
    def never(cls) -> "GroupLabel":
        return cls(None)

    @classmethod
    def treated_at(cls, period: int) -> "GroupLabel":
        return cls(int(period))

    @property
    def is_treated(self) -> bool:
        return self.period is not None

    def treated_in(self, t: int) -> bool:
        """Whether the unit is under treatment in 1-based period t"""
        return self.period is not None and t >= self.period

    def code(self) -> int:
        """Integer code: the period, or 0 for never-treated"""
        return NEVER_TREATED if self.period is None else self.period

    def __str__(self) -> str:
        return "inf" if self.period is None else str(self.period)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """
    Balanced N x T panel.
    outcomes is N x T, covariates is N x T x m; periods are indexed 1..T
    internally with the original labels kept in period_labels.
    """
    outcomes: np.ndarray
    covariates: np.ndarray
    groups: Tuple[GroupLabel, ...]
    unit_ids: Tuple[str, ...] = ()
    period_labels: Tuple[Any, ...] = ()
    outcome_name: str = "y"
    covariate_names: Tuple[str, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.outcomes, dtype=float)
        if y.ndim != 2:
            raise PanelValidationError(f"outcomes must be N x T, got shape {y.shape}")
        n, t = y.shape

        x = np.asarray(self.covariates, dtype=float)
        if x.size == 0 and x.ndim < 3:
            x = np.zeros((n, t, 0))
        if x.ndim != 3 or x.shape[:2] != (n, t):
            raise PanelValidationError(
                f"covariates must be {n} x {t} x m, got shape {x.shape}"
            )

        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise PanelValidationError("panel contains non-finite values")
        if len(self.groups) != n:
            raise PanelValidationError(f"{len(self.groups)} group labels for {n} units")

        for i, g in enumerate(self.groups):
            if g.is_treated and not 2 <= g.period <= t:
                raise PanelValidationError(
                    f"unit {i}: treated label {g.period} outside 2..{t}"
                )

        unit_ids = tuple(self.unit_ids) or tuple(str(i + 1) for i in range(n))
        period_labels = tuple(self.period_labels) or tuple(range(1, t + 1))
        covariate_names = tuple(self.covariate_names) or tuple(
            f"x{j + 1}" for j in range(x.shape[2])
        )
        if len(unit_ids) != n or len(set(unit_ids)) != n:
            raise PanelValidationError("unit ids must be unique, one per unit")
        if len(period_labels) != t:
            raise PanelValidationError(f"{len(period_labels)} period labels for T={t}")
        if len(covariate_names) != x.shape[2]:
            raise PanelValidationError("one name per covariate required")

        object.__setattr__(self, "outcomes", _frozen(y))
        object.__setattr__(self, "covariates", _frozen(x))
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "unit_ids", unit_ids)
        object.__setattr__(self, "period_labels", period_labels)
        object.__setattr__(self, "covariate_names", covariate_names)

    @property
    def n_units(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_periods(self) -> int:
        return self.outcomes.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[2]

    def group_codes(self) -> np.ndarray:
        """Per-unit integer group codes (0 = never treated)"""
        return np.array([g.code() for g in self.groups], dtype=int)

    def period_label(self, t: int):
        """Original label of 1-based period t"""
        return self.period_labels[t - 1]

    def subset(self, units: Sequence[int]) -> "PanelDataset":
        """Panel restricted to the given unit positions, in that order"""
        units = list(units)
        return PanelDataset(
            outcomes=self.outcomes[units],
            covariates=self.covariates[units],
            groups=tuple(self.groups[i] for i in units),
            unit_ids=tuple(self.unit_ids[i] for i in units),
            period_labels=self.period_labels,
            outcome_name=self.outcome_name,
            covariate_names=self.covariate_names,
        )

    def summary(self) -> Dict[str, Any]:
        """Shape summary"""
        codes = self.group_codes()
        return {
            "n_units": self.n_units,
            "n_periods": self.n_periods,
            "n_covariates": self.n_covariates,
            "n_never_treated": int(np.sum(codes == NEVER_TREATED)),
            "n_treated": int(np.sum(codes != NEVER_TREATED)),
        }

    def equals(self, other: "PanelDataset") -> bool:
        """Exact equality of values, labels and names"""
        return (
            isinstance(other, PanelDataset)
            and np.array_equal(self.outcomes, other.outcomes)
            and np.array_equal(self.covariates, other.covariates)
            and self.groups == other.groups
            and self.unit_ids == other.unit_ids
            and self.period_labels == other.period_labels
            and self.outcome_name == other.outcome_name
            and self.covariate_names == other.covariate_names
        )


@dataclass(frozen=True)
class GroupIndex:
    """
    Partition of units by treatment group.
    Unit positions are 0-based; groups are ascending 1-based periods.
    """
    members: Mapping[int, Tuple[int, ...]]
    never_treated: Tuple[int, ...]
    g_min: int
    n_units: int

    @property
    def groups(self) -> List[int]:
        return sorted(self.members)

    @property
    def treated_units(self) -> Tuple[int, ...]:
        return tuple(sorted(i for g in self.groups for i in self.members[g]))

    def size(self, g: int) -> int:
        return len(self.members[g])

    def group_of(self) -> np.ndarray:
        """Per-unit group period, 0 for never-treated"""
        out = np.zeros(self.n_units, dtype=int)
        for g, units in self.members.items():
            out[list(units)] = g
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "g_min": self.g_min,
            "never_treated": len(self.never_treated),
            "groups": {str(g): self.size(g) for g in self.groups},
        }


def build_group_index(data: PanelDataset) -> GroupIndex:
    """Partition units into I_g (ascending g) and I_inf"""
    members: Dict[int, List[int]] = {}
    never: List[int] = []

    for i, label in enumerate(data.groups):
        if label.is_treated:
            members.setdefault(label.period, []).append(i)
        else:
            never.append(i)

    if not never:
        raise PanelValidationError("empty control set: no never-treated units")
    if not members:
        raise PanelValidationError("nothing to estimate: no treated units")

    ordered = {g: tuple(members[g]) for g in sorted(members)}
    return GroupIndex(
        members=ordered,
        never_treated=tuple(never),
        g_min=min(ordered),
        n_units=data.n_units,
    )


# Validation

class Severity:
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ValidationCheck:
    """Outcome of one runtime check"""
    name: str
    passed: bool
    message: str
    severity: str = Severity.ERROR

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "severity": self.severity,
            "message": self.message,
        }


@dataclass(frozen=True)
class ValidationReport:
    """Checks run before estimation; rank diagnostics are attached after fitting"""
    checks: Tuple[ValidationCheck, ...] = ()
    rank_diagnostics: Mapping[str, float] = field(default_factory=dict)

    @property
    def failures(self) -> List[ValidationCheck]:
        return [c for c in self.checks if not c.passed and c.severity == Severity.ERROR]

    @property
    def warnings(self) -> List[ValidationCheck]:
        return [c for c in self.checks if not c.passed and c.severity == Severity.WARNING]

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, name: str) -> ValidationCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def with_diagnostics(self, diagnostics: Mapping[str, float]) -> "ValidationReport":
        merged = dict(self.rank_diagnostics)
        merged.update(diagnostics)
        return ValidationReport(self.checks, merged)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "rank_diagnostics": dict(self.rank_diagnostics),
        }


SMALL_GROUP = 30


def required_pre_periods(n_covariates: int, k_observed: int) -> int:
    """Pre-window length needed for the step-2 regression"""
    k = n_covariates + 1 + k_observed
    return k + 1 if n_covariates >= 1 else k


def validate_assumptions(
    data: PanelDataset,
    index: GroupIndex,
    k_observed: int = 0,
) -> ValidationReport:
    """
    Runtime checks on sample sizes. Failures are reported, never raised;
    the caller decides whether to abort.
    """
    checks: List[ValidationCheck] = []
    m = data.n_covariates

    pre = index.g_min - 1
    need = required_pre_periods(m, k_observed)
    checks.append(ValidationCheck(
        name="pre_treatment_length",
        passed=pre >= need,
        message=(
            f"{pre} pre-treatment periods (g_min={index.g_min}), "
            f"{need} needed for m={m} covariates and {k_observed} observed factors"
        ),
    ))

    for g in index.groups:
        size = index.size(g)
        checks.append(ValidationCheck(
            name=f"group_{g}_variance",
            passed=size >= 2,
            message=f"|I_{g}| = {size}; variance needs at least 2 units",
        ))
        if size >= 2:
            checks.append(ValidationCheck(
                name=f"group_{g}_size",
                passed=size >= SMALL_GROUP,
                message=f"|I_{g}| = {size}; normal approximation is asymptotic in group size",
                severity=Severity.WARNING,
            ))

    return ValidationReport(tuple(checks))
