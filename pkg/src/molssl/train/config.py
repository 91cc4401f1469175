"""Training configuration."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from molssl.errors import ConfigError
from molssl.models import TargetModelConfig

LOSS_KINDS = ("mse", "mae", "bce")

# grids swept in the reference experiments; recorded for the grid runner, not enforced
GRIDS = {
    "epochs": (100, 200, 300),
    "batch_size": (32, 64, 128),
    "lr": (1e-4, 5e-5, 1e-6, 5e-6),
    "warmup_ratio": (0.0, 0.05, 0.1),
    "update_every": (5, 10, 20),
    "alpha": (0.01, 0.05, 0.1, 0.2, 0.3, 0.5),
    "n_layers": (2, 3, 4, 5, 6),
    "dropout": (0.2, 0.4),
}


@dataclass(frozen=True)
class TrainConfig:
    # schedule
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    instructor_lr: float = 1e-3
    warmup_ratio: float = 0.0
    weight_decay: float = 1e-16
    pretrain_f_epochs: int = 100
    pretrain_g_epochs: int = 50
    early_stop_patience: int = 5
    plateau_patience: int = 10
    eval_batch_size: int = 512
    # pool rows per step: 0 spreads the whole pool over the epoch (global ratio),
    # n > 0 draws n rows per step from a fresh permutation each epoch
    pool_batch_size: int = 0
    # semi-supervised weighting
    update_every: int = 5
    alpha: float = 0.1
    lam: float = 0.0
    floor_pseudo_weight_at_zero: bool = False
    hard_pseudo_labels: bool = False
    loss: str = "auto"
    # baselines
    ups_gamma1: float = 0.9
    ups_gamma2: float = 0.1
    pi_rampup_epochs: int = 10
    # target model
    n_layers: int = 3
    node_hidden: int = 64
    edge_hidden: int = 64
    head_layers: int = 2
    dropout: float = 0.2
    readout: str = "mean"
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "pretrain_f_epochs", "pretrain_g_epochs"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.batch_size < 1 or self.eval_batch_size < 1:
            raise ConfigError("batch sizes must be positive")
        if self.pool_batch_size < 0:
            raise ConfigError("pool_batch_size must be >= 0")
        if not self.lr > 0 or not self.instructor_lr > 0:
            raise ConfigError("learning rates must be positive")
        if not 0.0 <= self.warmup_ratio < 1.0:
            raise ConfigError("warmup_ratio must be in [0, 1)")
        if self.update_every < 1:
            raise ConfigError("update_every (k) must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lam < 0:
            raise ConfigError("lam must be >= 0")
        if self.loss not in LOSS_KINDS + ("auto",):
            raise ConfigError(f"loss must be one of {LOSS_KINDS} or 'auto'")
        if not 0.0 <= self.ups_gamma2 <= self.ups_gamma1 <= 1.0:
            raise ConfigError("need 0 <= ups_gamma2 <= ups_gamma1 <= 1")
        if self.early_stop_patience < 0 or self.plateau_patience < 0 or self.pi_rampup_epochs < 0:
            raise ConfigError("patience and ramp-up values must be >= 0")
        self.model_config(1)  # validates the architecture fields

    def model_config(self, n_tasks: int) -> TargetModelConfig:
        return TargetModelConfig(n_layers=self.n_layers, node_hidden=self.node_hidden,
                                 edge_hidden=self.edge_hidden, head_layers=self.head_layers,
                                 dropout=self.dropout, readout=self.readout, n_tasks=n_tasks)

    def loss_kind(self, classification: bool) -> str:
        if self.loss == "auto":
            return "bce" if classification else "mse"
        if classification != (self.loss == "bce"):
            raise ConfigError(f"loss {self.loss!r} does not fit a "
                              f"{'classification' if classification else 'regression'} task")
        return self.loss

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{k: _coerce(k, v, type(known[k].default)) for k, v in d.items()})


_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _coerce(key: str, value, kind: type):
    """Accept YAML/JSON/CLI-string values for a field of type ``kind``."""
    if isinstance(value, kind) and not (kind is not bool and isinstance(value, bool)):
        return value
    try:
        if kind is bool and isinstance(value, str) and value.lower() in _BOOLS:
            return _BOOLS[value.lower()]
        if kind is int and isinstance(value, float) and value.is_integer():
            return int(value)
        if kind is int and isinstance(value, str):
            return int(value)
        if kind is float and isinstance(value, (int, str)) and not isinstance(value, bool):
            return float(value)
    except ValueError:
        pass
    raise ConfigError(f"{key} must be {kind.__name__}, got {value!r}")


def load_config(path) -> TrainConfig:
    """Flat YAML or JSON mapping of TrainConfig fields."""
    text = Path(path).read_text()
    if Path(path).suffix.lower() == ".json":
        data = json.loads(text)
    else:
        import yaml

        data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a flat mapping")
    return TrainConfig.from_dict(data)
