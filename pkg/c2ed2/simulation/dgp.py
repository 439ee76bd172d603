"""
C2ED2 - Simulation Design
Two factors f_t = (1, t)', two covariates, one treated group,
AR(1) outcome errors starting from zero.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigError
from ..panel.base import GroupLabel, PanelDataset

N_FACTORS = 2
N_COVARIATES = 2


class DgpConfig(BaseModel):
    """Knobs of the simulation design"""
    model_config = ConfigDict(frozen=True)

    n_units: int = Field(164, ge=2)
    n_periods: int = Field(9, ge=2)
    g_treat: int = 7
    treated_fraction: float = 0.5
    rho: float = 0.75
    theta: Tuple[float, float] = (0.0, 0.0)
    delta_g: float = 1.0
    tau_g: Tuple[float, float] = (0.0, 0.0)
    beta: Tuple[float, float] = (1.0, 1.0)
    noise_scale: float = Field(1.0, ge=0.0)
    noise_free: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _check_design(self) -> "DgpConfig":
        if not 2 <= self.g_treat <= self.n_periods:
            raise ValueError(f"g_treat={self.g_treat} must lie in 2..{self.n_periods}")
        if not 0.0 < self.treated_fraction < 1.0:
            raise ValueError("treated_fraction must lie in (0, 1)")
        if abs(self.rho) >= 1.0:
            raise ValueError("|rho| must be below 1")
        if not 1 <= self.n_treated < self.n_units:
            raise ValueError(
                f"{self.n_treated} treated of {self.n_units} units leaves an empty group"
            )
        return self

    @property
    def n_treated(self) -> int:
        return int(np.floor(self.n_units * self.treated_fraction))

    @property
    def indirect_g(self) -> float:
        return float(np.dot(self.tau_g, self.beta))

    @property
    def eta_g(self) -> float:
        return self.delta_g - self.indirect_g

    def truths(self) -> Dict[str, float]:
        """True total, direct and indirect ATT (constant over post periods)"""
        return {"total": self.delta_g, "direct": self.eta_g, "indirect": self.indirect_g}

    def post_periods(self) -> Tuple[int, ...]:
        return tuple(range(self.g_treat, self.n_periods + 1))


@dataclass(frozen=True)
class SimulatedPanel:
    """Observed panel plus both potential values for auditing"""
    data: PanelDataset
    config: DgpConfig
    treated: Tuple[int, ...]
    y_untreated: np.ndarray
    y_treated: np.ndarray
    x_untreated: np.ndarray
    x_treated: np.ndarray
    factors: np.ndarray

    def truths(self) -> Dict[str, float]:
        return self.config.truths()


def factor_path(n_periods: int) -> np.ndarray:
    """T x 2 matrix with rows f_t = (1, t)"""
    t = np.arange(1, n_periods + 1, dtype=float)
    return np.column_stack([np.ones(n_periods), t])


def generate(config: DgpConfig, rng: np.random.Generator) -> SimulatedPanel:
    """
    Draw one panel.
    x_it(inf) = lambda_i' f_t + v_it,  lambda_i = I + Z_i
    y_it(inf) = beta' x_it(inf) + alpha_i' f_t + eps_it
    alpha_i = diag(lambda_i) + theta d_i + N(0, I),  eps_it = rho eps_i,t-1 + u_it
    Treated units get y + Delta_g and x + tau_g from g_treat on.
    """
    n, T, g = config.n_units, config.n_periods, config.g_treat
    f = factor_path(T)

    # Draw order is part of the reproducibility contract
    Z = rng.standard_normal((n, N_FACTORS, N_COVARIATES))
    v = rng.standard_normal((n, T, N_COVARIATES))
    pair = rng.standard_normal((n, N_FACTORS))
    u = rng.standard_normal((n, T))
    treated = np.sort(rng.permutation(n)[: config.n_treated])

    if config.noise_free:
        Z, v, pair, u = (np.zeros_like(a) for a in (Z, v, pair, u))
    else:
        v = v * config.noise_scale
        u = u * config.noise_scale

    d = np.zeros(n)
    d[treated] = 1.0

    lam = np.eye(N_FACTORS, N_COVARIATES)[None] + Z
    x0 = np.einsum("tr,nrm->ntm", f, lam) + v

    alpha = np.diagonal(lam, axis1=1, axis2=2) + np.outer(d, config.theta) + pair

    eps = np.zeros((n, T))
    prev = np.zeros(n)
    for s in range(T):
        prev = config.rho * prev + u[:, s]
        eps[:, s] = prev

    beta = np.asarray(config.beta)
    y0 = x0 @ beta + alpha @ f.T + eps

    post = np.arange(1, T + 1) >= g
    y1 = y0 + config.delta_g * post[None, :]
    x1 = x0 + np.asarray(config.tau_g)[None, None, :] * post[None, :, None]

    exposed = (d[:, None] > 0) & post[None, :]
    y = np.where(exposed, y1, y0)
    x = np.where(exposed[:, :, None], x1, x0)

    labels = tuple(
        GroupLabel.treated_at(g) if d[i] else GroupLabel.never() for i in range(n)
    )
    data = PanelDataset(
        outcomes=y,
        covariates=x,
        groups=labels,
        covariate_names=("x1", "x2"),
    )
    return SimulatedPanel(
        data=data,
        config=config,
        treated=tuple(int(i) for i in treated),
        y_untreated=y0,
        y_treated=y1,
        x_untreated=x0,
        x_treated=x1,
        factors=f,
    )


def analytic_twfe_bias(config: DgpConfig) -> Dict[int, float]:
    """
    Expected bias of the TWFE event coefficient without covariates.
    With one treated group and dummies for t >= g, delta_t is the DD of
    group means against the pre-period average, so only theta' f_t
    survives: bias_t = theta' (f_t - mean_{s<g} f_s) = theta_2 (t - g/2).
    """
    f = factor_path(config.n_periods)
    g = config.g_treat
    pre_mean = f[: g - 1].mean(axis=0)
    theta = np.asarray(config.theta)
    return {t: float(theta @ (f[t - 1] - pre_mean)) for t in config.post_periods()}


def analytic_twfe_covariate_bias(config: DgpConfig) -> Dict[int, float]:
    """
    Large-N bias of the TWFE event coefficient with covariates, parallel trends only.

    After unit and time effects, the omitted term is alpha_i2 * t with
    alpha_i2 = lambda_i,22 + noise, which shares Z_i,22 with the trend slope
    of x2. The covariate slope therefore converges to
    gamma = beta + S / (S + (T - 1) s^2) e_2, S = sum_t (t - mean t)^2 and
    s the noise scale, and the event coefficient to Delta - tau' gamma.
    """
    if any(config.theta):
        raise ConfigError("covariate-adjusted TWFE bias is only derived for theta = (0, 0)")
    if config.noise_free:
        raise ConfigError("covariate-adjusted TWFE regression is singular without noise")

    T = config.n_periods
    t = np.arange(1, T + 1, dtype=float)
    spread = float(np.sum((t - t.mean()) ** 2))
    gamma = np.asarray(config.beta, dtype=float).copy()
    gamma[1] += spread / (spread + (T - 1) * config.noise_scale ** 2)
    bias = -float(np.dot(config.tau_g, gamma))
    return {s: bias for s in config.post_periods()}
