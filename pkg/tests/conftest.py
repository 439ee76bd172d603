import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from c2ed2.panel import GroupLabel, PanelDataset  # noqa: E402
from c2ed2.simulation import DgpConfig, generate  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def make_factor_panel(rng, n_never=20, n_treated=10, T=8, g=6, m=1, shift=0.0, tau=None):
    """
    Interactive-effects panel with two factors, every unit loading on both.
    Treated units get +shift on y (and +tau on x) from period g on.
    """
    n = n_never + n_treated
    t = np.arange(1, T + 1, dtype=float)
    f = np.column_stack([np.sin(t), np.log1p(t)])
    # mean loadings of y-bar and x-bar point in different directions so the
    # averages span both factors
    lam_center = np.array([[1.0, 0.3], [-0.5, 1.0]])[:, :m]
    lam = lam_center[None] + 0.4 * rng.standard_normal((n, 2, m))
    alpha = np.array([-0.5, 1.0])[None] + 0.4 * rng.standard_normal((n, 2))
    beta = np.linspace(1.0, 0.5, m)

    x = np.einsum("tr,nrm->ntm", f, lam) + 0.1 * rng.standard_normal((n, T, m))
    y = x @ beta + alpha @ f.T + 0.1 * rng.standard_normal((n, T))

    post = t >= g
    treated = np.arange(n_never, n)
    y[treated] += shift * post
    if tau is not None:
        x[treated] += np.asarray(tau)[None, None, :] * post[None, :, None]
        y[treated] += (np.asarray(tau) @ beta) * post

    groups = [GroupLabel.never()] * n_never + [GroupLabel.treated_at(g)] * n_treated
    return PanelDataset(outcomes=y, covariates=x, groups=groups)


@pytest.fixture
def factor_panel(rng):
    return make_factor_panel(rng)


@pytest.fixture
def low_noise_panel():
    config = DgpConfig(n_units=60, noise_scale=0.01, delta_g=1.0, seed=3)
    return generate(config, np.random.default_rng(3))
