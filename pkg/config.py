"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import hashlib
import json
import os
from copy import deepcopy
from typing import Any, Dict, Optional

import yaml

from channel.entity import ArrayConfig, PilotConfig
from common.errors import DomainError
from evaluation.entity import EvaluationConfig
from network.vrnet import ArchitectureConfig, Variant
from training.entity import TrainConfig

OUTPUT_ROOT_ENV = "VRNET_OUTPUT_ROOT"

# desk-scale defaults; keys without a default here are rejected
DEFAULTS: Dict[str, Any] = {
    "seed": 2024,
    "array": {
        "antennas": 64,
        "subarrays": 8,
        "rf_chains": 4,
        "carrier_frequency": 100e9,
        "paths": 1,
    },
    "pilot": {
        "pilots": 16,
        "snr_db": 10.0,
        "combiner_seed": 7,
        "noise_seed": 13,
        "fixed_combiner": False,
    },
    "dataset": {
        "train": 4000,
        "val": 500,
        "test": 500,
    },
    "architecture": {
        "variant": "dugc",
        "layers": 5,
        "gcn_layers": 2,
        "channels": 32,
        "kernel_size": 7,
        "beta": 10.0,
        "tau_factor": 0.1,
        "share_gcn": False,
        "share_threshold": False,
        "gamma_init": 0.2,
        "mu_init": 0.3,
    },
    "train": {
        "epochs": 40,
        "batch_size": 64,
        "learning_rate": 1e-3,
        "threshold_learning_rate": 1e-3,
        "lr_decay": 0.5,
        "lr_decay_epochs": 15,
        "alpha": 0.5,
        "prune_rho": 0.5,
        "prune_start_epoch": 20,
        "finetune_epochs": 10,
        "snr_db": [0.0, 20.0],
        "threads": 4,
        "seed": 11,
    },
    "evaluation": {
        "methods": ["dugc", "mdisr", "ls_oracle", "ls"],
        "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0],
        "pilots": [16, 24, 32, 40, 48],
        "pilot_snr_db": 10.0,
        "sweep_seed": 101,
        "batch_size": 100,
        "samples": None,
    },
    "paths": {
        "output_root": "runs",
    },
}

NULLABLE = {("train", "prune_start_epoch"): int, ("evaluation", "samples"): int}
DATA_SECTIONS = ["seed", "array", "pilot", "dataset"]


class Config:
    """
    Experiment configuration. Missing keys take the desk-scale defaults,
    unknown keys and mistyped values are rejected when loading.
    """

    def __init__(self, data: Optional[dict] = None):
        self._data = self._resolve(data or {})
        self._validate()

    @classmethod
    def load(cls, config_file: str) -> "Config":
        try:
            with open(config_file, "r") as stream:
                return cls.from_yaml(stream.read())
        except OSError as e:
            raise ConfigError(f"Cannot read '{config_file}': {e.strerror}.")

    @classmethod
    def from_yaml(cls, text: str) -> "Config":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML: {e}")

        if data is not None and not isinstance(data, dict):
            raise ConfigError("The config must be a mapping.")

        return cls(data)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        return cls(deepcopy(data))

    def to_dict(self) -> dict:
        return deepcopy(self._data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self._data, sort_keys=False)

    def replace(self, **sections) -> "Config":
        """
        Copy with some keys overridden, e.g. `cfg.replace(train={"epochs": 0})`.
        """
        data = self.to_dict()
        for section, values in sections.items():
            if isinstance(values, dict) and isinstance(data.get(section), dict):
                data[section].update(values)
            else:
                data[section] = values

        return Config(data)

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self._data == other._data

    @property
    def hash(self) -> str:
        return self._digest(self._data)

    @property
    def data_hash(self) -> str:
        return self._digest({key: self._data[key] for key in DATA_SECTIONS})

    @property
    def seed(self) -> int:
        return self._data["seed"]

    @property
    def array(self) -> ArrayConfig:
        return ArrayConfig(**self._data["array"])

    @property
    def pilot(self) -> PilotConfig:
        return PilotConfig(**self._data["pilot"])

    @property
    def dataset(self) -> Dict[str, int]:
        return dict(self._data["dataset"])

    @property
    def architecture(self) -> ArchitectureConfig:
        data = dict(self._data["architecture"])
        data["variant"] = Variant(data["variant"])

        return ArchitectureConfig(**data)

    @property
    def train(self) -> TrainConfig:
        data = dict(self._data["train"])
        data["snr_db"] = tuple(data["snr_db"])

        return TrainConfig(**data)

    @property
    def evaluation(self) -> EvaluationConfig:
        data = dict(self._data["evaluation"])
        for key in ["methods", "snr_db", "pilots"]:
            data[key] = tuple(data[key])

        return EvaluationConfig(**data)

    @property
    def output_root(self) -> str:
        return os.environ.get(OUTPUT_ROOT_ENV) or self._data["paths"]["output_root"]

    @staticmethod
    def _digest(data: dict) -> str:
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def _resolve(cls, data: dict) -> dict:
        resolved = deepcopy(DEFAULTS)
        for key, value in data.items():
            if key not in DEFAULTS:
                raise ConfigError(f"Unknown config key: '{key}'.")

            if isinstance(DEFAULTS[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"'{key}' must be a mapping.")

                for name, item in value.items():
                    if name not in DEFAULTS[key]:
                        raise ConfigError(f"Unknown config key: '{name}' in '{key}'.")

                    resolved[key][name] = cls._coerce(item, DEFAULTS[key][name], f"{key}.{name}", (key, name))
            else:
                resolved[key] = cls._coerce(value, DEFAULTS[key], key, (key,))

        return resolved

    @staticmethod
    def _coerce(value: Any, default: Any, name: str, path: tuple) -> Any:
        if value is None:
            if path in NULLABLE:
                return None

            raise ConfigError(f"'{name}' must not be empty.")

        expected = NULLABLE.get(path, type(default))

        if expected is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"'{name}' must be true or false, got '{value}'.")
            return value

        if expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"'{name}' must be an integer, got '{value}'.")
            return value

        if expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"'{name}' must be a number, got '{value}'.")
            return float(value)

        if expected is list:
            if not isinstance(value, list):
                raise ConfigError(f"'{name}' must be a list, got '{value}'.")

            item_type = type(default[0]) if default else str
            return [Config._coerce(item, item_type(), f"{name}[{i}]", ()) for i, item in enumerate(value)]

        if not isinstance(value, expected):
            raise ConfigError(f"'{name}' must be of type {expected.__name__}, got '{value}'.")

        return value

    def _validate(self) -> None:
        if len(self._data["train"]["snr_db"]) != 2:
            raise ConfigError("'train.snr_db' must be a [low, high] pair.")

        for key, count in self._data["dataset"].items():
            if count < 0:
                raise ConfigError(f"'dataset.{key}' must not be negative.")

        try:
            Variant(self._data["architecture"]["variant"])
        except ValueError:
            variants = ", ".join(v.value for v in Variant)
            raise ConfigError(f"Invalid variant '{self._data['architecture']['variant']}', use one of {variants}.")

        try:
            self.array, self.pilot, self.architecture, self.train, self.evaluation
        except DomainError as e:
            raise ConfigError(str(e))


class ConfigError(Exception):
    def __init__(self, message: str) -> None:
        super().__init__(f"Config error: {message}")
