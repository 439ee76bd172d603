"""
C2ED2 - Command Line
  c2ed2 estimate --input panel.csv ...   group-time ATTs on user data
  c2ed2 simulate --preset table1 ...     Monte Carlo study
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import pandas as pd
from dotenv import dotenv_values
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .config import get_settings
from .errors import (
    AssumptionError,
    C2ed2Error,
    ConfigError,
    DegenerateGroupError,
    NumericalError,
    PanelError,
    PanelValidationError,
)
from .estimators import ObservedFactor
from .log import configure_logging
from .orchestration import EstimationOptions, EstimationPipeline
from .panel import PanelSchema
from .reporting import emit, render_att, render_mc_json, write_plot_data
from .simulation import PRESETS, DgpConfig, Scenario, preset_configs, run_study, summarize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5

OutputFormat = Literal["text", "json", "csv"]


class RunConfig(BaseModel):
    """Validated options of one CLI invocation"""
    model_config = ConfigDict(frozen=True)

    subcommand: Literal["estimate", "simulate"]
    output_format: OutputFormat = "text"
    output: Optional[Path] = None

    # estimate
    input: Optional[Path] = None
    unit_col: str = "unit"
    time_col: str = "time"
    group_col: str = "group"
    outcome_col: str = "y"
    covariate_cols: Tuple[str, ...] = ()
    observed_factors: Tuple[str, ...] = ()
    groupwise_beta: bool = False
    placebo: bool = False
    force: bool = False
    plot_data: Optional[Path] = None

    # simulate
    preset: Optional[str] = None
    reps: int = Field(1000, ge=1)
    seed: Optional[int] = None
    threads: int = Field(1, ge=1)
    n: Optional[int] = None
    t: Optional[int] = None
    g: Optional[int] = None
    rho: Optional[float] = None
    treated_fraction: Optional[float] = None
    theta: Optional[Tuple[float, float]] = None
    delta: Optional[float] = None
    tau: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _check_subcommand(self) -> "RunConfig":
        if self.subcommand == "estimate":
            if self.input is None:
                raise ValueError("estimate requires --input")
        else:
            if self.preset is not None and self.preset not in PRESETS:
                raise ValueError(
                    f"invalid preset {self.preset!r}; choose from {', '.join(sorted(PRESETS))}"
                )
            custom = (self.theta, self.delta, self.tau)
            if self.preset is None and any(v is None for v in custom):
                raise ValueError("simulate requires --preset or all of --theta, --delta, --tau")
            if self.seed is None:
                raise ValueError("simulate requires --seed")
        return self

    def schema(self) -> PanelSchema:
        return PanelSchema(
            unit=self.unit_col,
            time=self.time_col,
            group=self.group_col,
            outcome=self.outcome_col,
            covariates=self.covariate_cols,
        )

    def base_dgp(self) -> DgpConfig:
        """Design knobs given on the command line over the defaults"""
        overrides = {
            "n_units": self.n,
            "n_periods": self.t,
            "g_treat": self.g,
            "rho": self.rho,
            "treated_fraction": self.treated_fraction,
            "seed": self.seed,
        }
        return DgpConfig(**{k: v for k, v in overrides.items() if v is not None})


# Parsing helpers

def _csv_list(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _pair(text: str) -> Tuple[float, float]:
    values = _csv_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    try:
        return float(values[0]), float(values[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number pair: {text!r}")


def parse_observed_factors(specs: Sequence[str]) -> List[ObservedFactor]:
    """constant, trend, or file:PATH (one value per period, no header)"""
    factors = []
    for spec in specs:
        if spec == "constant":
            factors.append(ObservedFactor.constant())
        elif spec == "trend":
            factors.append(ObservedFactor.trend())
        elif spec.startswith("file:"):
            path = Path(spec[len("file:"):])
            try:
                series = pd.read_csv(path, header=None).iloc[:, -1]
                values = series.astype(float).to_numpy()
            except (OSError, ValueError) as e:
                raise ConfigError(f"cannot read observed factor from {path}: {e}")
            factors.append(ObservedFactor.custom(values, name=path.stem))
        else:
            raise ConfigError(f"unknown observed factor {spec!r} (constant, trend, file:PATH)")
    return factors


# Simulation config file keys -> argparse destinations
CONFIG_KEYS: Dict[str, Tuple[str, type]] = {
    "N": ("n", int),
    "T": ("t", int),
    "G": ("g", int),
    "RHO": ("rho", float),
    "THETA": ("theta", _pair),
    "DELTA": ("delta", float),
    "TAU": ("tau", _pair),
    "TREATED_FRACTION": ("treated_fraction", float),
    "REPS": ("reps", int),
    "SEED": ("seed", int),
    "THREADS": ("threads", int),
    "PRESET": ("preset", str),
}


def apply_config_file(args: argparse.Namespace, path: Path):
    """Fill options not given on the command line from a KEY=VALUE file"""
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    for key, value in dotenv_values(path).items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r} in {path}")
        dest, convert = CONFIG_KEYS[key]
        if getattr(args, dest, None) is not None or value is None:
            continue
        try:
            setattr(args, dest, convert(value))
        except (ValueError, argparse.ArgumentTypeError) as e:
            raise ConfigError(f"{key}={value!r} in {path}: {e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="c2ed2",
        description="CCE difference-in-differences for fixed-T panels with interactive effects",
    )
    parser.add_argument("--log-level", default=None, help="override C2ED2_LOG_LEVEL")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def outputs(p):
        p.add_argument("--output-format", choices=["text", "json", "csv"], default="text")
        p.add_argument("--output", type=Path, default=None, help="file path (default stdout)")

    est = sub.add_parser("estimate", help="estimate group-time ATTs on a long-format CSV")
    est.add_argument("--input", type=Path, required=True)
    est.add_argument("--unit-col", default="unit")
    est.add_argument("--time-col", default="time")
    est.add_argument("--group-col", default="group")
    est.add_argument("--outcome-col", default="y")
    est.add_argument("--covariate-cols", type=_csv_list, default=())
    est.add_argument("--observed-factors", type=_csv_list, default=(),
                     help="comma list of constant, trend, file:PATH")
    est.add_argument("--groupwise-beta", action="store_true")
    est.add_argument("--placebo", action="store_true", help="add pre-treatment placebo rows")
    est.add_argument("--force", action="store_true", help="continue past failed validation checks")
    est.add_argument("--plot-data", type=Path, default=None, help="write event-study series as CSV")
    outputs(est)

    sim = sub.add_parser("simulate", help="run a Monte Carlo study")
    sim.add_argument("--config", type=Path, default=None, help="KEY=VALUE study file")
    sim.add_argument("--preset", default=None, help="table1 or table2")
    sim.add_argument("--reps", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--threads", type=int, default=None)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--t", type=int, default=None)
    sim.add_argument("--g", type=int, default=None)
    sim.add_argument("--rho", type=float, default=None)
    sim.add_argument("--treated-fraction", type=float, default=None)
    sim.add_argument("--theta", type=_pair, default=None)
    sim.add_argument("--delta", type=float, default=None)
    sim.add_argument("--tau", type=_pair, default=None)
    outputs(sim)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "log_level")}
    if args.subcommand == "simulate":
        values.setdefault("threads", get_settings().threads)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise ConfigError(messages)


# Commands

def cmd_estimate(config: RunConfig) -> int:
    """ingest -> validate -> estimate -> emit"""
    options = EstimationOptions(
        observed=tuple(parse_observed_factors(config.observed_factors)),
        groupwise_beta=config.groupwise_beta,
        placebo=config.placebo,
        averages=True,
        force=config.force,
    )
    pipeline = EstimationPipeline(options)
    run = pipeline.run_file(config.input, config.schema())

    emit(render_att(run.table, config.output_format, run.diagnostics()), config.output)
    if config.plot_data is not None:
        write_plot_data(run.table, config.plot_data)
    return EXIT_OK


def _scenarios(config: RunConfig) -> List[Tuple[Scenario, DgpConfig]]:
    try:
        base = config.base_dgp()
        if config.preset:
            return preset_configs(config.preset, base)
        custom = Scenario("custom", "Custom scenario", config.delta, config.tau)
        dgp = base.model_copy(update={"theta": config.theta, "delta_g": config.delta, "tau_g": config.tau})
        return [(custom, DgpConfig(**dgp.model_dump()))]
    except ValidationError as e:
        raise ConfigError("; ".join(err["msg"] for err in e.errors()))


def cmd_simulate(config: RunConfig) -> int:
    """Run every scenario of the preset (or the custom one) and emit the table"""
    reports = [
        run_study(dgp, n_reps=config.reps, n_jobs=config.threads, scenario=scenario)
        for scenario, dgp in _scenarios(config)
    ]
    if config.preset:
        logger.info(PRESETS[config.preset]["caption"])

    if config.output_format == "json":
        text = render_mc_json(reports)
    else:
        text = summarize(reports, fmt=config.output_format, coverage=True)
    emit(text, config.output)
    return EXIT_OK


def exit_code_for(error: Exception) -> int:
    if isinstance(error, ConfigError):
        return EXIT_USAGE
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (AssumptionError, DegenerateGroupError, PanelValidationError)):
        return EXIT_VALIDATION
    if isinstance(error, PanelError):
        return EXIT_INPUT
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        configure_logging(args.log_level or get_settings().log_level)
        if args.subcommand == "simulate" and args.config is not None:
            apply_config_file(args, args.config)
        config = config_from_args(args)
        if config.subcommand == "estimate":
            return cmd_estimate(config)
        return cmd_simulate(config)
    except C2ed2Error as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
