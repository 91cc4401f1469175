"""Instructor g: scores how likely each (molecule, label) pair is a real label."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from molssl.errors import ConfigError, ShapeMismatch
from molssl.models.gin import Module, kaiming_uniform
from molssl.tensorkit import SeededRng, Tensor, ops, parameter


@dataclass(frozen=True)
class InstructorConfig:
    embedding_dim: int
    n_tasks: int = 1
    hidden: int = 64

    def __post_init__(self):
        if self.embedding_dim < 1 or self.n_tasks < 1 or self.hidden < 1:
            raise ConfigError(f"invalid instructor config {self}")

    @property
    def input_dim(self) -> int:
        return self.embedding_dim + 2 * self.n_tasks

    def to_dict(self) -> dict:
        return asdict(self)


def instructor_features(embedding: np.ndarray, labels: np.ndarray, losses: np.ndarray) -> np.ndarray:
    """Concatenate ``[embedding | label | log1p(loss)]`` as a constant matrix.

    Missing labels (NaN) become 0 with a 0 loss; the loss is log-compressed
    so a few huge residuals do not saturate the first layer.
    """
    emb = np.asarray(embedding.data if isinstance(embedding, Tensor) else embedding, dtype=np.float64)
    y = np.nan_to_num(np.asarray(labels, dtype=np.float64), nan=0.0)
    h = np.nan_to_num(np.asarray(losses, dtype=np.float64), nan=0.0)
    if y.ndim == 1:
        y = y[:, None]
    if h.ndim == 1:
        h = h[:, None]
    if not (emb.shape[0] == y.shape[0] == h.shape[0]) or y.shape != h.shape:
        raise ShapeMismatch("instructor_features", emb.shape, y.shape, h.shape)
    return np.concatenate([emb, y, np.log1p(np.maximum(h, 0.0))], axis=1)


class InstructorModel(Module):
    """Two-hidden-layer MLP with a zero-initialized output layer.

    One logit per task; at init every confidence is exactly 0.5.
    """

    kind = "instructor"

    def __init__(self, config: InstructorConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = SeededRng(seed).stream("init", "instructor")
        w = config.hidden
        p: OrderedDict[str, Tensor] = OrderedDict()
        p["fc0.W"] = parameter(kaiming_uniform(rng, config.input_dim, w), "fc0.W")
        p["fc0.b"] = parameter(np.zeros(w), "fc0.b")
        p["fc1.W"] = parameter(kaiming_uniform(rng, w, w), "fc1.W")
        p["fc1.b"] = parameter(np.zeros(w), "fc1.b")
        p["out.W"] = parameter(np.zeros((w, config.n_tasks)), "out.W")
        p["out.b"] = parameter(np.zeros(config.n_tasks), "out.b")
        self.params = p

    def logits(self, features: np.ndarray) -> Tensor:
        if features.ndim != 2 or features.shape[1] != self.config.input_dim:
            raise ShapeMismatch("instructor_forward", features.shape, (None, self.config.input_dim))
        p = self.params
        z = ops.relu(ops.add(ops.matmul(Tensor(features), p["fc0.W"]), p["fc0.b"]))
        z = ops.relu(ops.add(ops.matmul(z, p["fc1.W"]), p["fc1.b"]))
        return ops.add(ops.matmul(z, p["out.W"]), p["out.b"])

    def forward(self, embedding, labels, losses) -> Tensor:
        return ops.sigmoid(self.logits(instructor_features(embedding, labels, losses)))

    __call__ = forward

    def confidence(self, embedding, labels, losses) -> np.ndarray:
        return self.forward(embedding, labels, losses).data


class ConstantInstructor:
    """Stand-in for g that returns a fixed confidence; has no parameters."""

    kind = "constant"

    def __init__(self, value: float, n_tasks: int = 1):
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"constant confidence must be in [0, 1], got {value}")
        self.value = float(value)
        self.n_tasks = n_tasks
        self.params: OrderedDict[str, Tensor] = OrderedDict()

    def parameters(self) -> list[Tensor]:
        return []

    def confidence(self, embedding, labels, losses) -> np.ndarray:
        n = np.asarray(labels).shape[0]
        return np.full((n, self.n_tasks), self.value)

    def forward(self, embedding, labels, losses) -> Tensor:
        return Tensor(self.confidence(embedding, labels, losses))

    __call__ = forward


def instructor_forward(g, graph_embedding, label_value, sample_loss) -> np.ndarray:
    """Confidence ``p`` in (0, 1) for each row; inputs are treated as constants."""
    return g.confidence(graph_embedding, label_value, sample_loss)
