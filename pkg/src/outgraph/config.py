"""Run configuration: a strict, typed, sectioned key-value file.

Sections mirror module names (``[run]``, ``[prior]``, ``[sampler]``,
``[simulate]``, ``[benchmark]``). Unknown sections or keys are errors, as
are values that fail to parse at their declared type; every command
validates the whole file before doing any work.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .priors import PriorConfig
from .sampler import SamplerConfig

__all__ = ["RunConfig", "SimulateConfig", "BenchmarkConfig", "ConfigError", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration file (unknown key, bad type, bad value)."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")

def _parse_int_list(text: str):
    return [int(x) for x in text.replace(",", " ").split()]

def _parse_float_list(text: str):
    return [float(x) for x in text.replace(",", " ").split()]


@dataclass
class RunConfig:
    """Everything ``fit`` needs."""

    data: str = ""
    orientation: str = "columns"     # series in columns or rows
    log_transform: bool = False
    diff_order: int = 1
    output: str = "out"
    chains: int = 1
    seed: int = 0
    edge_threshold: float = 0.1
    forecast: bool = True
    prior: PriorConfig = field(default_factory=PriorConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    def validate(self, require_data: bool = True):
        if require_data:
            if not self.data:
                raise ConfigError("run.data is required")
            if not Path(self.data).exists():
                raise ConfigError(f"data file not found: {self.data}")
        if self.orientation not in ("columns", "rows"):
            raise ConfigError("run.orientation must be 'columns' or 'rows'")
        if self.diff_order not in (0, 1, 2):
            raise ConfigError("run.diff_order must be 0, 1 or 2")
        if self.chains < 1:
            raise ConfigError("run.chains must be >= 1")
        if self.edge_threshold < 0:
            raise ConfigError("run.edge_threshold must be nonnegative")
        try:
            self.sampler.validate()
        except ValueError as exc:
            raise ConfigError(f"sampler: {exc}") from exc


@dataclass
class SimulateConfig:
    setting: int = 1
    p: int = 20
    T: int = 100
    sparsity: float = 0.05
    seed: int = 0
    extra: int = 0
    output: str = "simulated.csv"
    truth_output: str = "omega_true.csv"


@dataclass
class BenchmarkConfig:
    settings: list = field(default_factory=lambda: [1, 2, 3])
    T_values: list = field(default_factory=lambda: [40, 100])
    sparsities: list = field(default_factory=lambda: [0.05])
    p: int = 20
    replicates: int = 10
    seed: int = 0
    workers: int = 1
    edge_threshold: float = 0.1
    forecast_setting: int = 2
    forecast_p: int = 10
    forecast_T: int = 100
    forecast_sparsity: float = 0.05
    forecast_replicates: int = 5
    output: str = "benchmark"


_RUN_KEYS = {
    "data": str, "orientation": str, "log_transform": _parse_bool,
    "diff_order": int, "output": str, "chains": int, "seed": int,
    "edge_threshold": float, "forecast": _parse_bool,
}
_SIM_KEYS = {
    "setting": int, "p": int, "t": int, "sparsity": float, "seed": int,
    "extra": int, "output": str, "truth_output": str,
}
_BENCH_KEYS = {
    "settings": _parse_int_list, "t_values": _parse_int_list,
    "sparsities": _parse_float_list, "p": int, "replicates": int,
    "seed": int, "workers": int, "edge_threshold": float,
    "forecast_setting": int, "forecast_p": int, "forecast_t": int,
    "forecast_sparsity": float, "forecast_replicates": int, "output": str,
}
_PRIOR_KEYS = {
    "sigma_t": float, "sigma_d": float, "lam_lo": float, "lam_hi": float,
    "nu1": float, "kappa1": float, "kappa2": float, "sigma_kappa": float,
    "c1": float, "r": int, "k": int, "h0": float,
}
_SAMPLER_KEYS = {
    f.name.lower(): (int if f.type == "int" else float)
    for f in fields(SamplerConfig)
    if f.name not in ("mh_band", "lmc_band")
}
_SAMPLER_KEYS.update({"mh_band": _parse_float_list, "lmc_band": _parse_float_list})

# config keys are case-insensitive (configparser lowercases); map back to
# the dataclass field spellings
_FIELD_ALIASES = {
    "t": "T", "t_values": "T_values", "sigma_t": "sigma_T",
    "r": "R", "k": "K", "forecast_t": "forecast_T",
}
_FIELD_ALIASES.update(
    {f.name.lower(): f.name for f in fields(SamplerConfig) if f.name.lower() != f.name}
)


def _read_section(parser, name, schema):
    if name not in parser:
        return {}
    out = {}
    for key, raw in parser[name].items():
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' in section [{name}]")
        try:
            out[_FIELD_ALIASES.get(key, key)] = schema[key](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}.{key}: {raw!r} ({exc})") from exc
    return out


def load_config(path):
    """Parse and type-check a config file into the per-command configs.

    Returns ``(RunConfig, SimulateConfig, BenchmarkConfig)``.
    """
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file: {path}")
    known = {"run", "prior", "sampler", "simulate", "benchmark"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    try:
        prior = PriorConfig(**_read_section(parser, "prior", _PRIOR_KEYS))
    except ValueError as exc:
        raise ConfigError(f"prior: {exc}") from exc
    sampler_kw = _read_section(parser, "sampler", _SAMPLER_KEYS)
    for band in ("mh_band", "lmc_band"):
        if band in sampler_kw:
            sampler_kw[band] = tuple(sampler_kw[band])
    sampler = SamplerConfig(**sampler_kw)

    run = RunConfig(prior=prior, sampler=sampler, **_read_section(parser, "run", _RUN_KEYS))
    sim = SimulateConfig(**_read_section(parser, "simulate", _SIM_KEYS))
    bench = BenchmarkConfig(**_read_section(parser, "benchmark", _BENCH_KEYS))
    return run, sim, bench
