"""
C2ED2 - Data Connectors
Long-format CSV in, long-format CSV out

File layout: header row, then one row per (unit, period) with columns
unit, time, group, outcome and the covariates in declared order.
Group 0 or empty marks a never-treated unit; otherwise it is the period
label (e.g. a year) in which treatment starts.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..errors import InputFileError, ParseError, PanelValidationError, SchemaError, StructuralError
from .base import NEVER_TREATED, GroupLabel, PanelDataset

PathLike = Union[str, Path]

# Header line is line 1 of the file
_FIRST_DATA_LINE = 2


@dataclass(frozen=True)
class PanelSchema:
    """Column names of a long-format panel file"""
    unit: str = "unit"
    time: str = "time"
    group: str = "group"
    outcome: str = "y"
    covariates: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))

    @property
    def columns(self) -> List[str]:
        return [self.unit, self.time, self.group, self.outcome, *self.covariates]

    @classmethod
    def for_dataset(cls, data: PanelDataset) -> "PanelSchema":
        return cls(outcome=data.outcome_name, covariates=data.covariate_names)


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float("nan")


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column].str.strip()
    values = np.array([_to_float(s) for s in raw], dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        pos = int(np.argmax(bad))
        line = pos + _FIRST_DATA_LINE
        raise ParseError(
            f"row {line}: column '{column}' has non-numeric value {raw.iloc[pos]!r}",
            row=line,
            column=column,
        )
    return values


def _labels(values: np.ndarray) -> tuple:
    if np.all(values == np.round(values)):
        return tuple(int(v) for v in values)
    return tuple(float(v) for v in values)


class CsvConnector:
    """Reads and writes panels in the documented CSV layout"""

    def __init__(self, schema: PanelSchema):
        self.schema = schema

    def read(self, path: PathLike) -> PanelDataset:
        """Parse and structurally validate a panel file"""
        schema = self.schema
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except OSError as e:
            raise InputFileError(f"cannot read {path}: {e.strerror or e}")
        except pd.errors.EmptyDataError:
            raise InputFileError(f"{path} is empty: no header row")
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise InputFileError(f"{path} is not a readable CSV file: {e}")
        if frame.empty:
            raise InputFileError(f"{path} has a header but no data rows")
        frame.columns = [c.strip() for c in frame.columns]

        for column in schema.columns:
            if column not in frame.columns:
                raise SchemaError(f"column '{column}' not found in {path}", column=column)

        units = frame[schema.unit].str.strip().to_numpy()
        times = _numeric(frame, schema.time)
        raw_groups = frame[schema.group].str.strip()
        groups = np.where(raw_groups == "", "0", raw_groups)
        group_values = _numeric(pd.DataFrame({schema.group: groups}), schema.group)
        outcome = _numeric(frame, schema.outcome)
        covariates = [_numeric(frame, c) for c in schema.covariates]

        dup = pd.DataFrame({"u": units, "t": times}).duplicated()
        if dup.any():
            pos = int(np.argmax(dup.to_numpy()))
            raise StructuralError(
                f"duplicate row for unit {units[pos]!r}, period {times[pos]:g} "
                f"(line {pos + _FIRST_DATA_LINE})",
                unit=str(units[pos]),
                period=times[pos],
            )

        unit_ids = list(pd.unique(units))
        periods = np.unique(times)
        n, t, m = len(unit_ids), len(periods), len(schema.covariates)

        unit_pos = pd.Index(unit_ids).get_indexer(units)
        time_pos = np.searchsorted(periods, times)

        y = np.full((n, t), np.nan)
        x = np.full((n, t, m), np.nan)
        present = np.zeros((n, t), dtype=bool)
        y[unit_pos, time_pos] = outcome
        for j, col in enumerate(covariates):
            x[unit_pos, time_pos, j] = col
        present[unit_pos, time_pos] = True

        if not present.all():
            i, s = np.argwhere(~present)[0]
            label = _labels(periods)[s]
            raise StructuralError(
                f"unbalanced panel: unit {unit_ids[i]!r} has no row for period {label}",
                unit=str(unit_ids[i]),
                period=label,
            )

        labels = self._group_labels(unit_ids, unit_pos, group_values, periods)

        data = PanelDataset(
            outcomes=y,
            covariates=x,
            groups=labels,
            unit_ids=tuple(str(u) for u in unit_ids),
            period_labels=_labels(periods),
            outcome_name=schema.outcome,
            covariate_names=schema.covariates,
        )
        logger.debug(f"Ingested {path}: {data.summary()}")
        return data

    def _group_labels(
        self,
        unit_ids: Sequence[str],
        unit_pos: np.ndarray,
        group_values: np.ndarray,
        periods: np.ndarray,
    ) -> Tuple[GroupLabel, ...]:
        by_unit: Dict[int, np.ndarray] = {}
        for i in range(len(unit_ids)):
            by_unit[i] = np.unique(group_values[unit_pos == i])

        labels = []
        for i, values in by_unit.items():
            if len(values) != 1:
                raise PanelValidationError(
                    f"unit {unit_ids[i]!r} has more than one group value {list(values)}; "
                    "treatment must be absorbing with one start period"
                )
            value = values[0]
            if value == NEVER_TREATED:
                labels.append(GroupLabel.never())
                continue

            hit = np.flatnonzero(periods == value)
            if hit.size == 0:
                raise PanelValidationError(
                    f"unit {unit_ids[i]!r}: group {value:g} is not an observed period"
                )
            g = int(hit[0]) + 1
            if g < 2:
                raise PanelValidationError(
                    f"unit {unit_ids[i]!r}: treated label {value:g} is the first period; "
                    f"treated labels must fall in periods 2..{len(periods)}"
                )
            labels.append(GroupLabel.treated_at(g))
        return tuple(labels)

    def to_frame(self, data: PanelDataset) -> pd.DataFrame:
        """Long-format frame in schema column order"""
        schema = self.schema
        n, t = data.n_units, data.n_periods
        group_labels = [
            data.period_label(g.period) if g.is_treated else NEVER_TREATED
            for g in data.groups
        ]

        frame = pd.DataFrame({
            schema.unit: np.repeat(data.unit_ids, t),
            schema.time: np.tile(np.array(data.period_labels, dtype=object), n),
            schema.group: np.repeat(np.array(group_labels, dtype=object), t),
            schema.outcome: data.outcomes.reshape(-1),
        })
        for j, name in enumerate(schema.covariates):
            frame[name] = data.covariates[:, :, j].reshape(-1)
        return frame

    def write(self, data: PanelDataset, path: PathLike):
        """Write the panel so that read() reproduces it exactly"""
        if len(self.schema.covariates) != data.n_covariates:
            raise SchemaError(
                f"schema names {len(self.schema.covariates)} covariates, "
                f"panel has {data.n_covariates}"
            )
        self.to_frame(data).to_csv(path, index=False)


def ingest_csv(path: PathLike, schema: PanelSchema) -> PanelDataset:
    """Read a long-format panel file"""
    return CsvConnector(schema).read(path)


def write_csv(data: PanelDataset, path: PathLike, schema: PanelSchema = None):
    """Serialize a panel in the layout ingest_csv reads"""
    CsvConnector(schema or PanelSchema.for_dataset(data)).write(data, path)
