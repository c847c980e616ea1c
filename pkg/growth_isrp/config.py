"""
config

Run settings for the command-line front end.

Settings are merged from four sources, lowest precedence first:

    1. built-in defaults
    2. environment (.env supported): GROWTH_ISRP_SEED, GROWTH_ISRP_THREADS, GROWTH_ISRP_LOG_LEVEL
    3. a config file: .toml, anything else is read as JSON
    4. command-line flags

Dependencies:
    - python-dotenv: loads a .env file into the environment.

Usage:
    from growth_isrp.config import load_settings

    settings = load_settings("run.toml", {"seed": 7})
"""
import json
import logging
import os
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from dotenv import load_dotenv

from growth_isrp.errors import ConfigError
from growth_isrp.growth_models import parse_model_id
from growth_isrp.model_types import KoopmanCov, SimulationPlan, TimeGrid

logger = logging.getLogger(__name__)

ENV_PREFIX = "GROWTH_ISRP_"
LAYOUTS = ("wide", "long", "series", "owid")
FORMATS = ("csv", "json", "text", "dot", "table")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
DEFAULT_SIGMA2 = 0.001
DEFAULT_RHO = 0.1


@dataclass
class Settings:
    """
    Every setting a command may read.

    Attributes:
        input (str | None): Data file.
        layout (str): wide, long, series or owid.
        id_column / time_column / value_column (str): Column names of long, series and OWID files.
        location (str | None): OWID country.
        smooth_window (int | None): Centred moving-average window applied after loading.
        parent (str): Parent model of ISRP profiles.
        model (str | None): Catalog entry "parent/variation".
        params (dict[str, float]): Model parameters or starting values.
        free (list[str]): Parameters to estimate; empty means all.
        forms (list[str]): Rate forms for the selection; empty means the defaults.
        rate_form (str | None): Fit this rate form to the RGR profile instead of a size curve.
        include_periodic (bool): Add the periodic forms to the defaults.
        early_only (bool): Fit rate forms to the first half of the intervals only.
        theta (float | None): Shape exponent of the theta-logistic parent.
        target (str): ISRP target, r or K.
        grid (dict[str, float]): t0, h, q of simulated data.
        n (int): Trajectories per simulated dataset.
        sigma2 (float | None): Marginal variance of the Koopman covariance; DEFAULT_SIGMA2 when unset.
        rho (float | None): Lag-one correlation of the Koopman covariance; DEFAULT_RHO when unset.
        replications (int): Simulated datasets; above 1 switches isrp to replication mode.
        B (int): Bootstrap replicates.
        seed (int): Master seed.
        threads (int): Worker threads.
        log_level (str): Logging level name.
        output_dir (str): Directory outputs are written to.
        formats (list[str]): Output formats.
        svg (bool): Also emit SVG plots.
        sweep_param (str | None): Parameter varied by the profile command.
        sweep_values (list[float]): Values it takes.
        candidates (list[str]): Catalog entries compared by the bootstrap command.
    """

    input: str | None = None
    layout: str = "wide"
    id_column: str = "id"
    time_column: str = "t"
    value_column: str = "x"
    location: str | None = None
    smooth_window: int | None = None
    parent: str = "logistic"
    model: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    free: list[str] = field(default_factory=list)
    forms: list[str] = field(default_factory=list)
    rate_form: str | None = None
    include_periodic: bool = False
    early_only: bool = False
    theta: float | None = None
    target: str = "r"
    grid: dict[str, float] = field(default_factory=lambda: {"t0": 1.0, "h": 1.0, "q": 20})
    n: int = 1000
    sigma2: float | None = None
    rho: float | None = None
    replications: int = 1
    B: int = 1000
    seed: int = 1
    threads: int = 1
    log_level: str = "WARNING"
    output_dir: str = "."
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])
    svg: bool = False
    sweep_param: str | None = None
    sweep_values: list[float] = field(default_factory=list)
    candidates: list[str] = field(default_factory=list)

    def time_grid(self) -> TimeGrid:
        try:
            return {"t0": float(self.grid["t0"]), "h": float(self.grid["h"]), "q": int(self.grid["q"])}
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("grid needs numeric t0, h and q") from e

    def koopman(self) -> KoopmanCov:
        return {
            "sigma2": DEFAULT_SIGMA2 if self.sigma2 is None else self.sigma2,
            "rho": DEFAULT_RHO if self.rho is None else self.rho,
        }

    def supplied_koopman(self) -> KoopmanCov | None:
        """The Koopman covariance when sigma2 or rho was given, None otherwise."""
        if self.sigma2 is None and self.rho is None:
            return None
        return self.koopman()

    def plan(self) -> SimulationPlan:
        """Simulation plan from model, params, grid, n, sigma2, rho, replications and seed."""
        if not self.model:
            raise ConfigError("a simulation needs a model")
        return {
            "model": parse_model_id(self.model),
            "params": dict(self.params),  # type: ignore[typeddict-item]
            "grid": self.time_grid(),
            "n": self.n,
            "cov": self.koopman(),
            "replications": self.replications,
            "seed": self.seed,
        }


_FIELDS = {f.name: f for f in fields(Settings)}


def _coerce(name: str, value: Any) -> Any:
    default = getattr(Settings(), name)
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float) or name in ("theta", "sigma2", "rho"):
            return None if value is None else float(value)
        if isinstance(default, dict):
            if not isinstance(value, Mapping):
                raise TypeError(f"expected a table, got {type(value).__name__}")
            return {str(k): v if name == "grid" else float(v) for k, v in value.items()}
        if isinstance(default, list):
            items = value.split(",") if isinstance(value, str) else list(value)
            if name == "sweep_values":
                return [float(v) for v in items]
            return [str(v).strip() for v in items if str(v).strip()]
        if name == "smooth_window":
            return None if value is None else int(value)
        return None if value is None else str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for '{name}': {value!r} ({e})") from e


def _from_env() -> dict[str, Any]:
    load_dotenv()
    values: dict[str, Any] = {}
    for name in ("seed", "threads", "log_level"):
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw:
            values[name] = raw
    return values


def read_config_file(path: str | Path) -> dict[str, Any]:
    """
    Raises:
        ConfigError: If the file is missing or cannot be parsed.
    """
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"config file '{path}' does not exist")
    try:
        if file.suffix == ".toml":
            with open(file, "rb") as handle:
                return tomllib.load(handle)
        with open(file, encoding="utf-8") as handle:
            loaded = json.load(handle)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot parse config file '{path}': {e}") from e
    if not isinstance(loaded, dict):
        raise ConfigError("config file must hold a table of settings")
    return loaded


def validate(settings: Settings) -> Settings:
    """
    Raises:
        ConfigError: On out-of-range or unknown values.
    """
    if settings.layout not in LAYOUTS:
        raise ConfigError(f"layout must be one of {', '.join(LAYOUTS)}")
    if settings.target not in ("r", "K"):
        raise ConfigError("target must be r or K")
    if settings.threads < 1:
        raise ConfigError("threads must be at least 1")
    if settings.seed < 0:
        raise ConfigError("seed must be non-negative")
    if settings.B < 1 or settings.n < 1 or settings.replications < 1:
        raise ConfigError("B, n and replications must be at least 1")
    cov = settings.koopman()
    if cov["sigma2"] <= 0.0 or not abs(cov["rho"]) < 1.0:
        raise ConfigError(f"sigma2 must be positive and rho inside (-1, 1), got {cov['sigma2']} and {cov['rho']}")
    unknown = [f for f in settings.formats if f not in FORMATS]
    if unknown:
        raise ConfigError(f"unknown output formats: {', '.join(unknown)}")
    settings.log_level = settings.log_level.upper()
    if settings.log_level not in LOG_LEVELS:
        raise ConfigError(f"log level must be one of {', '.join(LOG_LEVELS)}")
    if settings.input is not None and not Path(settings.input).is_file():
        raise ConfigError(f"input file '{settings.input}' does not exist")
    return settings


def load_settings(config_path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> Settings:
    """
    Merge defaults, environment, config file and flag overrides, in rising precedence.

    Parameters:
        config_path (str | Path | None): Optional TOML or JSON file.
        overrides (Mapping[str, Any] | None): Flag values; None entries are ignored.

    Returns:
        Settings: Validated settings.

    Raises:
        ConfigError: On unknown keys, bad values or a missing file.
    """
    merged: dict[str, Any] = _from_env()
    if config_path is not None:
        merged.update(read_config_file(config_path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(unknown)}")
    settings = Settings(**{name: _coerce(name, value) for name, value in merged.items()})
    return validate(settings)
