import numpy as np
import pytest

from c2ed2.errors import CollinearityError, ConfigError
from c2ed2.estimators import TwfeSpec, event_dummies, twfe_event_study, two_way_demean
from c2ed2.panel import GroupLabel, PanelDataset, build_group_index


def _two_way_panel(rng, n=12, T=6, g=4, shift=0.0, m=1):
    unit = rng.standard_normal(n)[:, None]
    period = rng.standard_normal(T)[None, :]
    y = unit + period
    n_never = n // 2
    y[n_never:, g - 1:] += shift
    x = rng.standard_normal((n, T, m))
    groups = [GroupLabel.never()] * n_never + [GroupLabel.treated_at(g)] * (n - n_never)
    return PanelDataset(outcomes=y, covariates=x, groups=groups)


def test_exact_two_way_structure_gives_zero(rng):
    data = _two_way_panel(rng)
    fit = twfe_event_study(data, build_group_index(data))
    assert fit.periods == (4, 5, 6)
    np.testing.assert_allclose(fit.delta_hat, 0.0, atol=1e-10)


def test_pure_shift_recovered(rng):
    data = _two_way_panel(rng, shift=1.0)
    fit = twfe_event_study(data, build_group_index(data))
    np.testing.assert_allclose(fit.delta_hat, 1.0, atol=1e-10)


def test_within_and_dummies_agree(rng):
    data = _two_way_panel(rng, shift=0.5)
    noisy = PanelDataset(
        outcomes=data.outcomes + rng.standard_normal(data.outcomes.shape),
        covariates=data.covariates,
        groups=data.groups,
    )
    index = build_group_index(noisy)
    for covariates in (False, True):
        within = twfe_event_study(noisy, index, TwfeSpec(covariates, "within"))
        dummies = twfe_event_study(noisy, index, TwfeSpec(covariates, "dummies"))
        np.testing.assert_allclose(within.delta_hat, dummies.delta_hat, atol=1e-8)
        np.testing.assert_allclose(within.std_errors, dummies.std_errors, atol=1e-8)
        np.testing.assert_allclose(within.beta_hat, dummies.beta_hat, atol=1e-8)
        assert within.dof == dummies.dof


def test_invariant_to_unit_and_period_constants(rng):
    data = _two_way_panel(rng, shift=0.3)
    noisy = data.outcomes + rng.standard_normal(data.outcomes.shape)
    base = PanelDataset(outcomes=noisy, covariates=data.covariates, groups=data.groups)
    moved = PanelDataset(
        outcomes=noisy + rng.standard_normal((12, 1)) + rng.standard_normal((1, 6)),
        covariates=data.covariates,
        groups=data.groups,
    )
    index = build_group_index(base)
    np.testing.assert_allclose(
        twfe_event_study(base, index).delta_hat, twfe_event_study(moved, index).delta_hat, atol=1e-10
    )


def test_event_dummies_layout(rng):
    data = _two_way_panel(rng)
    D, periods = event_dummies(data, build_group_index(data))
    assert D.shape == (12, 6, 3)
    assert periods == (4, 5, 6)
    assert D[:6].sum() == 0
    np.testing.assert_array_equal(D[6, 3:, :], np.eye(3))
    assert D[6, :3].sum() == 0


def test_two_way_demean_removes_effects(rng):
    a = rng.standard_normal((5, 1)) + rng.standard_normal((1, 4))
    np.testing.assert_allclose(two_way_demean(a), 0.0, atol=1e-12)


def test_collinear_covariate_named(rng):
    data = _two_way_panel(rng, shift=1.0)
    index = build_group_index(data)
    D, _ = event_dummies(data, index)
    bad = PanelDataset(
        outcomes=data.outcomes,
        covariates=D[:, :, :1].copy(),
        groups=data.groups,
        covariate_names=("treated_in_4",),
    )
    with pytest.raises(CollinearityError) as err:
        twfe_event_study(bad, index, TwfeSpec(include_covariates=True))
    assert set(err.value.columns) & {"event[4]", "treated_in_4"}


def test_spec_name_and_method():
    assert TwfeSpec().name == "ols"
    assert TwfeSpec(include_covariates=True).name == "ols_covariates"
    with pytest.raises(ConfigError):
        TwfeSpec(method="gmm")


def test_confidence_interval_uses_normal_quantile(rng):
    data = _two_way_panel(rng, shift=1.0)
    noisy = PanelDataset(
        outcomes=data.outcomes + 0.1 * rng.standard_normal(data.outcomes.shape),
        covariates=data.covariates,
        groups=data.groups,
    )
    fit = twfe_event_study(noisy, build_group_index(noisy))
    lo, hi = fit.ci(5)
    assert hi - lo == pytest.approx(2 * 1.959963984540054 * fit.std_error(5))
    assert fit.to_dict()["events"][1]["period_label"] == 5
