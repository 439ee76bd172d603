import json

import numpy as np
import pytest

from c2ed2.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from c2ed2.panel import PanelDataset, PanelSchema, write_csv
from c2ed2.reporting import att_table_from_json, render_att_text

from conftest import make_factor_panel


@pytest.fixture
def panel_csv(tmp_path, low_noise_panel):
    path = tmp_path / "panel.csv"
    write_csv(low_noise_panel.data, path)
    return path


def _estimate_args(path, *extra):
    return ["estimate", "--input", str(path), "--covariate-cols", "x1,x2", *extra]


def test_estimate_recovers_shift(tmp_path, panel_csv):
    out = tmp_path / "att.json"
    code = main(_estimate_args(panel_csv, "--output-format", "json", "--output", str(out)))
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    post = [c for c in payload["table"]["cells"] if not c["placebo"]]
    assert [c["period"] for c in post] == [7, 8, 9]
    for cell in post:
        assert cell["delta_hat"] == pytest.approx(1.0, abs=0.1)
    assert payload["diagnostics"]["groups"]["groups"] == {"7": 30}


def test_json_rerenders_to_identical_text(tmp_path, panel_csv):
    text_out, json_out = tmp_path / "att.txt", tmp_path / "att.json"
    assert main(_estimate_args(panel_csv, "--placebo", "--output", str(text_out))) == EXIT_OK
    assert main(_estimate_args(panel_csv, "--placebo", "--output-format", "json", "--output", str(json_out))) == EXIT_OK
    table, diagnostics = att_table_from_json(json_out.read_text())
    assert render_att_text(table, diagnostics) == text_out.read_text()
    assert table.placebo_cells()


def test_estimate_to_stdout_and_plot_data(tmp_path, panel_csv, capsys):
    plot = tmp_path / "plot.csv"
    code = main(_estimate_args(panel_csv, "--output-format", "csv", "--plot-data", str(plot)))
    assert code == EXIT_OK
    header = capsys.readouterr().out.splitlines()[0]
    assert header.startswith("group,period,kind,n,ATT,ATT_se,ATT_lower,ATT_upper")
    lines = plot.read_text().splitlines()
    assert lines[0] == "group,period,event_time,series,estimate,lower,upper,placebo"
    assert len(lines) == 1 + 3 * 2


def test_observed_factor_from_file(tmp_path, panel_csv):
    series = tmp_path / "oil.csv"
    series.write_text("\n".join(str(v) for v in np.log(np.arange(2.0, 11.0))) + "\n")
    out = tmp_path / "att.json"
    code = main(_estimate_args(
        panel_csv, "--observed-factors", f"constant,file:{series}",
        "--output-format", "json", "--output", str(out),
    ))
    assert code == EXIT_OK
    assert json.loads(out.read_text())["diagnostics"]["factors"][-2:] == ["constant", "oil"]


def test_missing_column_is_schema_error(panel_csv, capsys):
    code = main(["estimate", "--input", str(panel_csv), "--covariate-cols", "x1,x7"])
    assert code == EXIT_INPUT
    assert "x7" in capsys.readouterr().err


@pytest.mark.parametrize("content", [None, "", "unit,time\na,1\nb,2,3,4\n", "unit,time,group,y\n"])
def test_unreadable_input_is_input_error(tmp_path, capsys, content):
    path = tmp_path / "panel.csv"
    if content is not None:
        path.write_text(content)
    assert main(["estimate", "--input", str(path)]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "error:" in err
    assert "Traceback" not in err


def test_unwritable_output_is_usage_error(tmp_path, panel_csv, capsys):
    out = tmp_path / "missing" / "att.txt"
    assert main(_estimate_args(panel_csv, "--output", str(out))) == EXIT_USAGE
    assert "cannot write output" in capsys.readouterr().err


def test_bad_thread_environment_is_usage_error(tmp_path, monkeypatch):
    from c2ed2.config import reset_settings

    monkeypatch.setenv("C2ED2_THREADS", "many")
    reset_settings()
    try:
        args = ["simulate", "--preset", "table1", "--reps", "1", "--seed", "1", "--n", "40"]
        assert main(args) == EXIT_USAGE
    finally:
        reset_settings()


def test_validation_failure_exit_code(tmp_path, rng):
    path = tmp_path / "short.csv"
    write_csv(make_factor_panel(rng, T=5, g=3), path)
    args = ["estimate", "--input", str(path), "--covariate-cols", "x1"]
    assert main(args) == EXIT_VALIDATION


def test_numerical_error_not_forced(tmp_path, rng):
    data = make_factor_panel(rng)
    bad = PanelDataset(outcomes=data.outcomes, covariates=data.outcomes[:, :, None] * 2.0, groups=data.groups)
    path = tmp_path / "collinear.csv"
    write_csv(bad, path)
    args = ["estimate", "--input", str(path), "--covariate-cols", "x1", "--force"]
    assert main(args) == EXIT_NUMERICAL


def test_usage_errors(tmp_path):
    assert main(["simulate", "--preset", "table1", "--reps", "2"]) == EXIT_USAGE
    assert main(["simulate", "--preset", "table9", "--seed", "1"]) == EXIT_USAGE
    assert main(["simulate", "--preset", "table1", "--seed", "1", "--reps", "0"]) == EXIT_USAGE
    assert main(["simulate", "--seed", "1", "--theta", "0,1"]) == EXIT_USAGE
    assert main(["estimate"]) == EXIT_USAGE
    assert main(["simulate", "--seed", "1", "--theta", "0,1,2", "--delta", "1", "--tau", "0,0"]) == EXIT_USAGE


def _simulate(tmp_path, name, *extra):
    out = tmp_path / name
    args = ["simulate", "--preset", "table1", "--reps", "3", "--seed", "11", "--n", "40",
            "--output-format", "csv", "--output", str(out), *extra]
    assert main(args) == EXIT_OK
    return out.read_text()


def test_simulate_preset_table(tmp_path):
    csv = _simulate(tmp_path, "a.csv")
    lines = csv.strip().splitlines()
    assert len(lines) == 1 + 6
    assert lines[0] == (
        "scenario,estimator,BIAS(D7),BIAS(D8),BIAS(D9),MSE(D7),MSE(D8),MSE(D9),"
        "COV(D7),COV(D8),COV(D9)"
    )


def test_simulate_is_byte_identical_across_threads(tmp_path):
    assert _simulate(tmp_path, "a.csv", "--threads", "1") == _simulate(tmp_path, "b.csv", "--threads", "2")


def test_threads_fall_back_to_environment(tmp_path, monkeypatch):
    from c2ed2.config import reset_settings

    monkeypatch.setenv("C2ED2_THREADS", "2")
    reset_settings()
    try:
        assert _simulate(tmp_path, "env.csv") == _simulate(tmp_path, "one.csv", "--threads", "1")
    finally:
        reset_settings()


def test_simulate_config_file(tmp_path):
    study = tmp_path / "study.env"
    study.write_text("PRESET=table1\nREPS=3\nSEED=11\nN=40\n")
    out = tmp_path / "file.csv"
    assert main(["simulate", "--config", str(study), "--output-format", "csv", "--output", str(out)]) == EXIT_OK
    assert out.read_text() == _simulate(tmp_path, "flags.csv")


def test_simulate_custom_scenario_json(tmp_path):
    out = tmp_path / "mc.json"
    args = ["simulate", "--theta", "0,1", "--delta", "2", "--tau", "0,1", "--reps", "2", "--seed", "3",
            "--n", "40", "--output-format", "json", "--output", str(out)]
    assert main(args) == EXIT_OK
    (report,) = json.loads(out.read_text())["reports"]
    assert report["scenario"] == "custom"
    assert report["config"]["theta"] == [0.0, 1.0]
    assert {c["target"] for c in report["cells"] if c["estimator"] == "c2ed2"} == {"total", "direct", "indirect"}
