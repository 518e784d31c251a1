"""Strict experiment configuration files.

Flat `key = value` text with `[section]` headers. `[run]` holds `seed` and
`out`; every other section is named after a subcommand and may only contain
that subcommand's parameters.
"""
import configparser
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from heatbath.core.errors import ConfigError
from heatbath.core.localization import tr

logger = logging.getLogger(__name__)


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# 每个子命令允许的参数 / parameters accepted per subcommand
SCHEMA: Dict[str, Dict[str, Any]] = {
    "run": {"seed": int, "out": str},
    "synth": {"foster": str, "random_specs": int, "max_dim": int},
    "couple": {"foster": str, "random_loads": int, "max_dim": int, "observables": int},
    "line-sim": {
        "foster": str, "dx": float, "x_max": float, "t_max": float, "far_end": str,
        "bump_center": float, "bump_width": float, "window_start": float, "window_end": float,
        "noise_sigma": float,
    },
    "string-sim": {
        "foster": str, "dx": float, "x_max": float, "t_max": float, "far_end": str,
        "tau": float, "rho": float, "bump_center": float, "bump_width": float,
        "window_start": float, "window_end": float,
    },
    "lattice-sim": {"M": int, "c": float, "beta": float, "dt": float, "t_max": float},
    "autocorr": {
        "M": int, "c": float, "beta": float, "dt": float, "t_max": float, "runs": int,
        "workers": int, "max_n": int, "threshold": float,
    },
    "mb-stats": {"mass": float, "kT": float, "n": int, "k": float},
    "invert": {"phi": str, "random_spectra": int, "max_dim": int},
    "report": {},
}


@dataclass
class ExperimentConfig:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str = "out"

    def get(self, key, default=None):
        return self.params.get(key, default)


def _convert(section, key, raw):
    converter = SCHEMA[section][key]
    try:
        return converter(raw) if converter is not bool else _bool(raw)
    except ValueError as exc:
        raise ConfigError(tr("bad_value").format(key, raw, exc)) from exc


def read_config_text(text: str, source: str = "<string>") -> Dict[str, Dict[str, Any]]:
    """Parse and type-check every section; unknown sections or keys raise ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sections = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(tr("unknown_section").format(section))
        values = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(tr("unknown_key").format(key, section))
            values[key] = _convert(section, key, raw)
        sections[section] = values
    return sections


def read_config_file(path: str) -> Dict[str, Dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return read_config_text(text, source=path)


def build_experiment_config(command: str, file_sections: Optional[Dict[str, Dict[str, Any]]],
                            overrides: Dict[str, Any], seed: Optional[int], out: Optional[str]) -> ExperimentConfig:
    """Merge file values with command-line overrides (flags win)."""
    if command not in SCHEMA:
        raise ConfigError(tr("unknown_section").format(command))
    file_sections = file_sections or {}
    params = dict(file_sections.get(command, {}))
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in SCHEMA[command]:
            raise ConfigError(tr("unknown_key").format(key, command))
        params[key] = value
    run = file_sections.get("run", {})
    final_seed = seed if seed is not None else run.get("seed", 0)
    final_out = out if out is not None else run.get("out", "out")
    if final_seed < 0:
        raise ConfigError(tr("bad_value").format("seed", final_seed, "must be non-negative"))
    logger.debug("config for %s: %s (seed %s, out %s)", command, params, final_seed, final_out)
    return ExperimentConfig(command, params, int(final_seed), str(final_out))
