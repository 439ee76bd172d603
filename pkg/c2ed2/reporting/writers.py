"""
C2ED2 - Result Writers
Text, JSON and CSV renderings of ATT tables and Monte Carlo reports.
Every renderer reads the same AttTable, so numbers only differ in formatting.
"""

import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..errors import ConfigError
from ..estimators import AttCell, AttTable
from ..simulation import McReport

PathLike = Union[str, Path]

TARGET_LABELS = (("total", "ATT"), ("indirect", "indirect"), ("direct", "direct"))


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _kind(cell: AttCell) -> str:
    if cell.window:
        return f"{cell.window}-avg"
    return "placebo" if cell.placebo else "post"


def att_frame(table: AttTable) -> pd.DataFrame:
    """One row per cell and window average with estimates, SEs and CIs"""
    rows: List[Dict[str, Any]] = []
    for cell in list(table.cells) + list(table.averages):
        row: Dict[str, Any] = {
            "group": cell.group,
            "period": cell.period_label if not cell.window else cell.window,
            "kind": _kind(cell),
            "n": cell.group_size,
        }
        for target, label in TARGET_LABELS:
            lo, hi = cell.ci(target, table.level)
            row[label] = cell.estimate(target)
            row[f"{label}_se"] = cell.std_error(target)
            row[f"{label}_lower"] = lo
            row[f"{label}_upper"] = hi
        for j, tau in enumerate(cell.tau_hat):
            row[f"tau{j + 1}"] = tau
        rows.append(row)
    return pd.DataFrame(rows)


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _render_cell(cell: AttCell, level: float) -> str:
    parts = [f"{cell.group:>5}", f"{str(cell.period_label if not cell.window else cell.window):>8}",
             f"{_kind(cell):>9}", f"{cell.group_size:>5}"]
    for target, _ in TARGET_LABELS:
        lo, hi = cell.ci(target, level)
        se = cell.std_error(target)
        parts.append(f"{_fmt(cell.estimate(target)):>10} ({_fmt(se)}) [{_fmt(lo)}, {_fmt(hi)}]")
    return " ".join(parts)


def render_att_text(table: AttTable, diagnostics: Optional[Mapping[str, Any]] = None) -> str:
    """Aligned table followed by the diagnostics block"""
    pct = f"{table.level * 100:g}%"
    lines = [
        f"Group-time ATT estimates with {pct} confidence intervals",
        f"{'g':>5} {'period':>8} {'kind':>9} {'n':>5} "
        + " ".join(f"{label + ' (se) [ci]':>30}" for _, label in TARGET_LABELS),
    ]
    for cell in list(table.cells) + list(table.averages):
        lines.append(_render_cell(cell, table.level))

    if diagnostics:
        lines.append("")
        lines.append("Diagnostics")
        lines.extend(_render_diagnostics(diagnostics))
    return "\n".join(lines) + "\n"


def _render_diagnostics(diagnostics: Mapping[str, Any]) -> List[str]:
    lines: List[str] = []
    panel = diagnostics.get("panel", {})
    if panel:
        lines.append("  panel: " + ", ".join(f"{k}={v}" for k, v in panel.items()))
    groups = diagnostics.get("groups", {})
    if groups:
        sizes = ", ".join(f"g={g}: {n}" for g, n in groups.get("groups", {}).items())
        lines.append(f"  groups: never-treated={groups.get('never_treated')}; {sizes}; g_min={groups.get('g_min')}")
    if diagnostics.get("factors"):
        lines.append("  factors: " + ", ".join(diagnostics["factors"]))
    names = diagnostics.get("covariates", [])
    if diagnostics.get("beta_hat"):
        lines.extend(_slope_lines("beta_hat (pooled)", diagnostics, names))
    for g, block in diagnostics.get("beta_hat_by_group", {}).items():
        lines.extend(_slope_lines(f"beta_hat g={g}", block, names))
    validation = diagnostics.get("validation", {})
    for check in validation.get("checks", []):
        flag = "ok" if check["passed"] else ("WARN" if check["severity"] == "warning" else "FAIL")
        lines.append(f"  [{flag}] {check['name']}: {check['message']}")
    for name, value in validation.get("rank_diagnostics", {}).items():
        lines.append(f"  {name}: {value:.6g}")
    return lines


def _slope_lines(label: str, block: Mapping[str, Any], names: Sequence[str]) -> List[str]:
    """One line per covariate: estimate (se) [ci]"""
    beta = block["beta_hat"]
    missing = [None] * len(beta)
    se = block.get("beta_se") or missing
    ci = block.get("beta_ci") or {}
    lower, upper = ci.get("lower") or missing, ci.get("upper") or missing
    lines = [f"  {label}:"]
    for j, b in enumerate(beta):
        name = names[j] if j < len(names) else f"x{j + 1}"
        lines.append(f"    {name}: {_fmt(b)} ({_fmt(se[j])}) [{_fmt(lower[j])}, {_fmt(upper[j])}]")
    return lines


def render_att_json(table: AttTable, diagnostics: Optional[Mapping[str, Any]] = None) -> str:
    payload = {"table": table.to_dict(), "diagnostics": dict(diagnostics or {})}
    return json.dumps(payload, indent=2, default=_json_default) + "\n"


def att_table_from_json(text: str):
    """Inverse of render_att_json: (AttTable, diagnostics)"""
    payload = json.loads(text)
    return AttTable.from_dict(payload["table"]), payload.get("diagnostics", {})


def _frame_to_csv(frame: pd.DataFrame) -> str:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format="%.10g", lineterminator="\n")
    return buf.getvalue()


def render_att_csv(table: AttTable) -> str:
    return _frame_to_csv(att_frame(table))


def plot_frame(table: AttTable) -> pd.DataFrame:
    """Event-study series (total and indirect) with CI bounds, data only"""
    rows = []
    for cell in table.cells:
        for target in ("total", "indirect"):
            lo, hi = cell.ci(target, table.level)
            rows.append({
                "group": cell.group,
                "period": cell.period_label,
                "event_time": cell.event_time,
                "series": target,
                "estimate": cell.estimate(target),
                "lower": lo,
                "upper": hi,
                "placebo": cell.placebo,
            })
    return pd.DataFrame(rows)


def render_att(table: AttTable, fmt: str, diagnostics: Optional[Mapping[str, Any]] = None) -> str:
    if fmt == "text":
        return render_att_text(table, diagnostics)
    if fmt == "json":
        return render_att_json(table, diagnostics)
    if fmt == "csv":
        return render_att_csv(table)
    raise ValueError(f"unknown output format {fmt!r}")


def render_mc_json(reports: Sequence[McReport]) -> str:
    payload = {"reports": [r.to_dict() for r in reports]}
    return json.dumps(payload, indent=2, default=_json_default) + "\n"


def emit(text: str, path: Optional[PathLike] = None):
    """Write to path, or stdout when no path is given"""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot write output {path}: {e.strerror or e}")
    logger.info(f"Wrote {path}")


def write_plot_data(table: AttTable, path: PathLike):
    emit(_frame_to_csv(plot_frame(table)), path)
