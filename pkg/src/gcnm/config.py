"""Model/run configuration: flat dataclass, nested JSON form, and schema."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .windows import SegmentSpec

GRAPH_MODES = ("dynamic", "obs", "adp", "pre", "com")
BASELINE_KINDS = ("gcnm", "gru", "gru_i", "mean_impute", "knn_impute")


@dataclass(frozen=True)
class ModelConfig:
    # model
    tau: int = 12
    horizon: int = 12
    d: int = 32
    blocks: int = 4
    kernel: int = 2
    dilations: tuple[int, ...] = (1, 2)
    fc_hidden: int = 128
    # memory
    L: int = 12
    S: int = 5
    n_h: int = 2
    n_d: int = 2
    n_w: int = 2
    # graph
    graph_mode: str = "dynamic"
    K: int = 2
    alpha: float = 3.0
    shared_filter: bool = False
    # training
    learning_rate: float = 0.001
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 15
    seed: int = 0
    # baseline selection
    baseline_kind: str = "gcnm"
    hidden_size: int = 64
    # data handling
    train_fraction: float = 0.7
    val_fraction: float = 0.1
    samples_per_day: int | None = None   # inferred from the series when None
    samples_per_week: int | None = None

    def __post_init__(self):
        if self.graph_mode not in GRAPH_MODES:
            raise ConfigError(f"graph mode must be one of {GRAPH_MODES}, got {self.graph_mode!r}")
        if self.baseline_kind not in BASELINE_KINDS:
            raise ConfigError(f"baseline kind must be one of {BASELINE_KINDS}")
        for name in ("tau", "horizon", "d", "blocks", "kernel", "fc_hidden", "L", "S",
                     "batch_size", "max_epochs", "hidden_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.K < 0 or self.alpha <= 0:
            raise ConfigError("K must be >= 0 and alpha > 0")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0")
        if min(self.n_h, self.n_d, self.n_w) < 0 or self.n_h + self.n_d + self.n_w < 1:
            raise ConfigError("need at least one memory segment scale")

    def segment_spec(self, step_minutes: int) -> SegmentSpec:
        per_day = self.samples_per_day or (24 * 60) // step_minutes
        per_week = self.samples_per_week or 7 * per_day
        return SegmentSpec(tau=self.tau, horizon=self.horizon, n_h=self.n_h,
                           n_d=self.n_d, n_w=self.n_w, samples_per_day=per_day,
                           samples_per_week=per_week, lookback=self.L)


_SECTIONS = {
    "model": ("tau", "horizon", "d", "blocks", "kernel", "dilations", "fc_hidden"),
    "memory": ("L", "S", "n_h", "n_d", "n_w"),
    "graph": ("mode", "K", "alpha", "shared_filter"),
    "training": ("learning_rate", "batch_size", "max_epochs", "patience", "seed"),
    "baseline": ("kind", "hidden_size"),
    "data": ("train_fraction", "val_fraction", "samples_per_day", "samples_per_week"),
}
# JSON key -> dataclass field where the two differ
_RENAMES = {("graph", "mode"): "graph_mode", ("baseline", "kind"): "baseline_kind"}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tau": {"type": "integer", "minimum": 1},
                "horizon": {"type": "integer", "minimum": 1},
                "d": {"type": "integer", "minimum": 1},
                "blocks": {"type": "integer", "minimum": 1},
                "kernel": {"type": "integer", "minimum": 1},
                "dilations": {"type": "array", "items": {"type": "integer", "minimum": 1},
                              "minItems": 1},
                "fc_hidden": {"type": "integer", "minimum": 1},
            },
        },
        "memory": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "L": {"type": "integer", "minimum": 1},
                "S": {"type": "integer", "minimum": 1},
                "n_h": {"type": "integer", "minimum": 0},
                "n_d": {"type": "integer", "minimum": 0},
                "n_w": {"type": "integer", "minimum": 0},
            },
        },
        "graph": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "mode": {"enum": list(GRAPH_MODES)},
                "K": {"type": "integer", "minimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "shared_filter": {"type": "boolean"},
            },
        },
        "training": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "batch_size": {"type": "integer", "minimum": 1},
                "max_epochs": {"type": "integer", "minimum": 1},
                "patience": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer"},
            },
        },
        "baseline": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(BASELINE_KINDS)},
                "hidden_size": {"type": "integer", "minimum": 1},
            },
        },
        "data": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "val_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "samples_per_day": {"type": ["integer", "null"], "minimum": 1},
                "samples_per_week": {"type": ["integer", "null"], "minimum": 1},
            },
        },
    },
}


def validate_payload(payload: dict) -> None:
    try:
        jsonschema.validate(payload, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config at {exc.json_path}: {exc.message}") from exc


def config_from_payload(payload: dict) -> ModelConfig:
    validate_payload(payload)
    kwargs = {}
    for section, keys in _SECTIONS.items():
        body = payload.get(section, {})
        for key in keys:
            if key in body:
                name = _RENAMES.get((section, key), key)
                value = body[key]
                if name == "dilations":
                    value = tuple(value)
                kwargs[name] = value
    return ModelConfig(**kwargs)


def config_to_payload(config: ModelConfig) -> dict:
    payload: dict = {}
    for section, keys in _SECTIONS.items():
        body = {}
        for key in keys:
            name = _RENAMES.get((section, key), key)
            value = getattr(config, name)
            if isinstance(value, tuple):
                value = list(value)
            body[key] = value
        payload[section] = body
    return payload


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> ModelConfig:
    """Load a nested JSON config; ``overrides`` are dotted section.key=value flags."""
    payload: dict = {}
    if path is not None:
        with open(path) as fh:
            payload = json.load(fh)
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        dotted, raw = item.split("=", 1)
        section, key = dotted.split(".", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings like dynamic/gru need no quoting
        payload.setdefault(section, {})[key] = value
    return config_from_payload(payload)
