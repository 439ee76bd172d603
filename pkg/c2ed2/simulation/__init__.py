from .dgp import (
    DgpConfig,
    SimulatedPanel,
    analytic_twfe_bias,
    analytic_twfe_covariate_bias,
    factor_path,
    generate,
)
from .monte_carlo import (
    ESTIMATORS,
    PRESETS,
    SCENARIOS,
    McCell,
    McReport,
    ReplicationRecord,
    Scenario,
    preset_configs,
    replication_rng,
    run_replication,
    run_study,
    summarize,
    table_frame,
)

__all__ = [
    "DgpConfig",
    "ESTIMATORS",
    "McCell",
    "McReport",
    "PRESETS",
    "ReplicationRecord",
    "SCENARIOS",
    "Scenario",
    "SimulatedPanel",
    "analytic_twfe_bias",
    "analytic_twfe_covariate_bias",
    "factor_path",
    "generate",
    "preset_configs",
    "replication_rng",
    "run_replication",
    "run_study",
    "summarize",
    "table_frame",
]
