import json
import logging
import os
import sys
from dataclasses import dataclass, field

from concept_ordering.errors import ConfigError, UsageError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def load_config_file(path):
    """Flag defaults from a TOML or JSON file; keys may use - or _."""
    try:
        if str(path).endswith(".toml"):
            with open(path, "rb") as f:
                values = tomllib.load(f)
        else:
            with open(path, encoding="utf-8") as f:
                values = json.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    if not isinstance(values, dict):
        raise ConfigError(f"Config file {path} must hold a table of flag values")
    return {key.replace("-", "_"): value for key, value in values.items()}


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT, force=True)


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    strategy: str = None
    seed: int = 0
    workers: int = 1

    def validate(self):
        if self.workers < 1:
            raise UsageError(f"--workers must be >= 1, got {self.workers}")
        for name, path in self.inputs.items():
            if path is not None and not os.path.exists(path):
                raise UsageError(f"--{name.replace('_', '-')} {path}: no such file or directory")
        return self
