"""
Run Configuration
Declarative run settings: defaults, an optional JSON/YAML file, and
command-line overrides (flags win).
"""

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from errors import ConfigError

SCHEDULE_MODES = ("periodic", "max-sleep")
DISTURBANCE_MODES = ("zero", "uniform", "worst")
LP_BACKENDS = ("simplex", "highs")


@dataclass
class RunConfig:
    system: str = "aps"
    j_max: int = 10
    max_iter: int = 50
    horizon: int = 300
    schedule: str = "periodic"
    period: Optional[int] = None
    disturbance: str = "worst"
    seed: int = 42
    output_dir: str = "out"
    dump_feasible_sets: bool = False
    a32_zero: bool = False
    lp_backend: str = "simplex"
    x0: Optional[list] = None
    gnuplot_script: bool = False
    sample_minutes: float = 5.0

    def validate(self) -> "RunConfig":
        """Check ranges and referenced files; returns self"""
        for name in ("j_max", "max_iter", "horizon"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.period is not None and (not isinstance(self.period, int) or self.period < 1):
            raise ConfigError(f"period must be a positive integer, got {self.period!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not (0 <= self.seed < 2 ** 64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.lp_backend not in LP_BACKENDS:
            raise ConfigError(f"lp_backend must be one of {LP_BACKENDS}, got {self.lp_backend!r}")

        if self.system != "aps":
            _require_file(self.system, "system")
        if self.schedule.startswith("@"):
            _require_file(self.schedule[1:], "schedule")
        elif self.schedule not in SCHEDULE_MODES:
            raise ConfigError(f"schedule must be periodic, max-sleep or @file, got {self.schedule!r}")
        if self.disturbance.startswith("meals@"):
            _require_file(self.disturbance[len("meals@"):], "meal")
        elif self.disturbance not in DISTURBANCE_MODES:
            raise ConfigError(
                f"disturbance must be zero, uniform, worst or meals@file, got {self.disturbance!r}"
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _require_file(path: str, what: str) -> None:
    if not Path(path).is_file():
        raise ConfigError(f"{what} file not found: {path}")


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, a config file and flag overrides.

    Args:
        path: Optional JSON or YAML run file
        overrides: Flag values; None entries are ignored

    Returns:
        Validated RunConfig
    """
    values: Dict[str, Any] = {}
    known = {f.name for f in fields(RunConfig)}

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"config file {path} is not valid JSON/YAML: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(data)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown setting: {key}")
        values[key] = value

    return RunConfig(**values).validate()
