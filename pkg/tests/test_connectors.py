import numpy as np
import pytest

from c2ed2.errors import InputFileError, ParseError, PanelValidationError, SchemaError, StructuralError
from c2ed2.panel import GroupLabel, PanelDataset, PanelSchema, build_group_index, ingest_csv, write_csv

SCHEMA = PanelSchema(unit="id", time="year", group="first", outcome="y", covariates=("x",))

ROWS = [
    "id,year,first,y,x",
    "a,2001,0,1.0,0.5",
    "a,2002,0,1.5,0.25",
    "a,2003,0,2.0,0.125",
    "b,2001,2003,3.0,1.0",
    "b,2002,2003,3.5,1.5",
    "b,2003,2003,4.0,2.5",
    "c,2001,,0.1,0.2",
    "c,2002,,0.3,0.4",
    "c,2003,,0.5,0.6",
]


def _write(tmp_path, rows, name="panel.csv"):
    path = tmp_path / name
    path.write_text("\n".join(rows) + "\n")
    return path


def test_ingest_long_format(tmp_path):
    data = ingest_csv(_write(tmp_path, ROWS), SCHEMA)
    assert data.unit_ids == ("a", "b", "c")
    assert data.period_labels == (2001, 2002, 2003)
    assert data.groups == (GroupLabel.never(), GroupLabel.treated_at(3), GroupLabel.never())
    np.testing.assert_array_equal(data.outcomes[1], [3.0, 3.5, 4.0])
    np.testing.assert_array_equal(data.covariates[2, :, 0], [0.2, 0.4, 0.6])
    assert data.covariate_names == ("x",)


def test_ingest_sorts_periods(tmp_path):
    rows = [ROWS[0]] + list(reversed(ROWS[1:]))
    data = ingest_csv(_write(tmp_path, rows), SCHEMA)
    assert data.period_labels == (2001, 2002, 2003)
    assert data.unit_ids == ("c", "b", "a")
    np.testing.assert_array_equal(data.outcomes[data.unit_ids.index("a")], [1.0, 1.5, 2.0])
    np.testing.assert_array_equal(data.outcomes[data.unit_ids.index("c")], [0.1, 0.3, 0.5])


def _partition(data):
    index = build_group_index(data)
    ids = data.unit_ids
    members = {g: {ids[i] for i in units} for g, units in index.members.items()}
    return members, {ids[i] for i in index.never_treated}, index.g_min


def test_group_partition_ignores_row_order(tmp_path):
    base = ingest_csv(_write(tmp_path, ROWS, "a.csv"), SCHEMA)
    shuffled_rows = [ROWS[0]] + [ROWS[1:][i] for i in np.random.default_rng(8).permutation(len(ROWS) - 1)]
    shuffled = ingest_csv(_write(tmp_path, shuffled_rows, "b.csv"), SCHEMA)
    reversed_ = ingest_csv(_write(tmp_path, [ROWS[0]] + list(reversed(ROWS[1:])), "c.csv"), SCHEMA)
    expected = ({3: {"b"}}, {"a", "c"}, 3)
    assert _partition(base) == expected
    assert _partition(shuffled) == expected
    assert _partition(reversed_) == expected


def test_missing_covariate_column(tmp_path):
    schema = PanelSchema(unit="id", time="year", group="first", outcome="y", covariates=("x", "z"))
    with pytest.raises(SchemaError) as err:
        ingest_csv(_write(tmp_path, ROWS), schema)
    assert err.value.column == "z"
    assert "'z'" in str(err.value)


def test_non_numeric_value_reports_row(tmp_path):
    rows = list(ROWS)
    rows[5] = "b,2002,2003,oops,1.5"
    with pytest.raises(ParseError) as err:
        ingest_csv(_write(tmp_path, rows), SCHEMA)
    assert err.value.row == 6
    assert err.value.column == "y"


def test_duplicate_row(tmp_path):
    with pytest.raises(StructuralError, match="duplicate"):
        ingest_csv(_write(tmp_path, ROWS + ["a,2002,0,9.0,9.0"]), SCHEMA)


def test_unbalanced_panel_names_cell(tmp_path):
    rows = [r for r in ROWS if r != "c,2002,,0.3,0.4"]
    with pytest.raises(StructuralError) as err:
        ingest_csv(_write(tmp_path, rows), SCHEMA)
    assert err.value.unit == "c"
    assert err.value.period == 2002


def test_group_must_be_constant(tmp_path):
    rows = list(ROWS)
    rows[6] = "b,2003,2002,4.0,2.5"
    with pytest.raises(PanelValidationError):
        ingest_csv(_write(tmp_path, rows), SCHEMA)


def test_group_in_first_period_rejected(tmp_path):
    rows = [r.replace("b,2001,2003", "b,2001,2001").replace("b,2002,2003", "b,2002,2001")
            .replace("b,2003,2003", "b,2003,2001") for r in ROWS]
    with pytest.raises(PanelValidationError, match="first period"):
        ingest_csv(_write(tmp_path, rows), SCHEMA)


def test_write_then_ingest_is_identity(tmp_path, factor_panel):
    path = tmp_path / "out.csv"
    write_csv(factor_panel, path)
    again = ingest_csv(path, PanelSchema.for_dataset(factor_panel))
    assert again.equals(factor_panel)


def test_round_trip_keeps_original_labels(tmp_path):
    data = ingest_csv(_write(tmp_path, ROWS), SCHEMA)
    path = tmp_path / "copy.csv"
    write_csv(data, path, SCHEMA)
    assert ingest_csv(path, SCHEMA).equals(data)


def test_round_trip_design_sized_file(tmp_path):
    rng = np.random.default_rng(21)
    n, T = 164, 8
    groups = [GroupLabel.never()] * 82 + [GroupLabel.treated_at(5)] * 82
    data = PanelDataset(
        outcomes=rng.standard_normal((n, T)),
        covariates=rng.standard_normal((n, T, 1)),
        groups=groups,
        period_labels=tuple(range(2011, 2011 + T)),
    )
    path = tmp_path / "design.csv"
    write_csv(data, path)

    again = ingest_csv(path, PanelSchema.for_dataset(data))
    assert again.equals(data)
    assert (again.n_units, again.n_periods, again.n_covariates) == (164, 8, 1)
    index = build_group_index(again)
    assert len(index.never_treated) == 82
    assert index.g_min == 5
    assert index.size(5) == 82


def test_unreadable_files_raise_input_errors(tmp_path):
    with pytest.raises(InputFileError, match="cannot read"):
        ingest_csv(tmp_path / "absent.csv", SCHEMA)
    with pytest.raises(InputFileError, match="empty"):
        ingest_csv(_write(tmp_path, [""], "blank.csv"), SCHEMA)
    with pytest.raises(InputFileError, match="not a readable CSV"):
        ingest_csv(_write(tmp_path, [ROWS[0], "a,2001,0,1.0,0.5,9,9"], "ragged.csv"), SCHEMA)
    with pytest.raises(InputFileError, match="no data rows"):
        ingest_csv(_write(tmp_path, [ROWS[0]], "header.csv"), SCHEMA)
