import numpy as np
import pytest

from c2ed2.errors import AssumptionError, SchemaError
from c2ed2.estimators import ObservedFactor
from c2ed2.orchestration import EstimationOptions, EstimationPipeline
from c2ed2.panel import PanelSchema, write_csv

from conftest import make_factor_panel


def test_run_records_diagnostics(factor_panel):
    pipeline = EstimationPipeline()
    run = pipeline.run(factor_panel)
    diag = run.diagnostics()
    assert diag["groups"] == {"g_min": 6, "never_treated": 20, "groups": {"6": 10}}
    assert diag["validation"]["passed"]
    assert "factor_gram_condition" in diag["validation"]["rank_diagnostics"]
    assert "slope_gram_condition" in diag["validation"]["rank_diagnostics"]
    assert [c.window for c in run.table.averages] == ["pre", "post"]
    assert run.table.placebo_cells()
    assert pipeline.get_stats()["runs_completed"] == 1


def test_failed_validation_aborts(rng):
    data = make_factor_panel(rng, T=5, g=3)
    pipeline = EstimationPipeline()
    with pytest.raises(AssumptionError) as err:
        pipeline.run(data)
    assert not err.value.report.check("pre_treatment_length").passed
    assert pipeline.runs_failed == 1


def test_force_continues_past_validation(rng):
    data = make_factor_panel(rng, n_never=20, n_treated=1)
    with pytest.raises(AssumptionError):
        EstimationPipeline().run(data)
    run = EstimationPipeline(EstimationOptions(force=True)).run(data)
    assert not run.report.passed
    cell = run.table.post_cells()[0]
    assert cell.group_size == 1
    assert cell.var_delta is None and cell.ci() == (None, None)


def test_observed_constant_factor(factor_panel):
    run = EstimationPipeline(EstimationOptions(observed=(ObservedFactor.constant(),))).run(factor_panel)
    assert run.diagnostics()["factors"] == ["mean(y)", "mean(x1)", "constant"]


def test_run_file(tmp_path, factor_panel):
    path = tmp_path / "panel.csv"
    write_csv(factor_panel, path)
    pipeline = EstimationPipeline()
    run = pipeline.run_file(path, PanelSchema.for_dataset(factor_panel))
    direct = pipeline.run(factor_panel)
    np.testing.assert_array_equal(run.result.fit.beta_hat, direct.result.fit.beta_hat)

    with pytest.raises(SchemaError):
        pipeline.run_file(path, PanelSchema(covariates=("x1", "x9")))
    assert pipeline.runs_failed == 1


def test_slope_inference_in_diagnostics(factor_panel):
    run = EstimationPipeline(EstimationOptions(groupwise_beta=True)).run(factor_panel)
    diag = run.diagnostics()
    fit = run.result.fit
    assert diag["covariates"] == ["x1"]
    assert diag["beta_se"] == [float(fit.beta_se()[0])]
    assert diag["beta_ci"]["lower"][0] < diag["beta_hat"][0] < diag["beta_ci"]["upper"][0]

    group = diag["beta_hat_by_group"]["6"]
    assert group["beta_hat"] == [float(fit.beta_for(6)[0])]
    assert group["beta_se"][0] > 0.0
    assert group["beta_ci"]["lower"][0] < group["beta_hat"][0] < group["beta_ci"]["upper"][0]


def test_pooled_run_has_no_group_slopes(factor_panel):
    diag = EstimationPipeline().run(factor_panel).diagnostics()
    assert "beta_hat_by_group" not in diag
    assert len(diag["beta_se"]) == 1
