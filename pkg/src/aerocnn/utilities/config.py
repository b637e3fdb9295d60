"""
Run configuration: one versioned YAML file, command-line overrides on top.

Sections: seed, output, domain, grid, augmentation, model, train, logging.
Missing keys take the defaults below; unknown keys are an error.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from ..augment import AugPolicy, AugPolicyError
from ..geometry import DomainSpec
from ..surrogate import ModelConfig, TrainConfig
from .logger import DEFAULT_ENDPOINT

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1

DEFAULTS = {
    "version": CONFIG_VERSION,
    "seed": 0,
    "output": "output",
    "domain": {"min": [-3.0, -1.2, -1.2], "max": [3.0, 1.2, 1.2]},
    "grid": {"dims": [128, 32, 32], "workers": None},
    "augmentation": {},
    "model": {},
    "train": {},
    "logging": {"level": "INFO", "file": None, "remote": False, "endpoint": DEFAULT_ENDPOINT},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"
    file: str | None = None
    remote: bool = False
    endpoint: str = DEFAULT_ENDPOINT


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output: Path
    domain: DomainSpec
    workers: int | None
    policy: AugPolicy
    model: ModelConfig
    train: TrainConfig
    logging: LoggingConfig

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.domain.dims


def _merge(base: dict, update: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict):
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def _check_keys(section: str, values: dict, cls, exclude=()):
    known = {f.name for f in fields(cls)} - set(exclude)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown {section} key(s): {sorted(unknown)}")


def build_run_config(raw: dict) -> RunConfig:
    if raw.get("version", CONFIG_VERSION) != CONFIG_VERSION:
        raise ConfigError(f"config version {raw.get('version')!r} is not supported (expected {CONFIG_VERSION})")
    cfg = _merge(DEFAULTS, raw)
    seed = int(cfg["seed"])

    try:
        domain = DomainSpec.from_bounds(list(cfg["domain"]["min"]) + list(cfg["domain"]["max"]), cfg["grid"]["dims"])

        aug = dict(cfg["augmentation"])
        _check_keys("augmentation", aug, AugPolicy, exclude=("seed",))
        policy = AugPolicy(seed=seed, **aug)

        model = dict(cfg["model"])
        _check_keys("model", model, ModelConfig, exclude=("input_dims",))
        model_cfg = ModelConfig(input_dims=domain.dims, **model)

        train = dict(cfg["train"])
        _check_keys("train", train, TrainConfig, exclude=("seed", "policy"))
        train_cfg = TrainConfig(seed=seed, policy=policy, **train)

        log = dict(cfg["logging"])
        _check_keys("logging", log, LoggingConfig)
        logging_cfg = LoggingConfig(**log)
    except ConfigError:
        raise
    except (AugPolicyError, ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e

    workers = cfg["grid"]["workers"]
    return RunConfig(
        seed=seed,
        output=Path(cfg["output"]),
        domain=domain,
        workers=None if workers is None else int(workers),
        policy=policy,
        model=model_cfg,
        train=train_cfg,
        logging=logging_cfg,
    )


def load_run_config(path=None, seed=None, dims=None, domain=None, epochs=None, output=None) -> RunConfig:
    """Read `path` (or the defaults) and apply the command-line overrides."""
    raw = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        with open(path, "r") as f:
            try:
                raw = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"{path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        if "version" not in raw:
            raise ConfigError(f"{path}: missing version field")

    raw = copy.deepcopy(raw)
    if seed is not None:
        raw["seed"] = seed
    if output is not None:
        raw["output"] = str(output)
    if dims is not None:
        raw.setdefault("grid", {})["dims"] = list(dims)
    if domain is not None:
        bounds = [float(b) for b in domain]
        raw["domain"] = {"min": bounds[:3], "max": bounds[3:]}
    if epochs is not None:
        raw.setdefault("train", {})["epochs"] = int(epochs)
    config = build_run_config(raw)
    logger.debug("Run config: %s", config)
    return config
