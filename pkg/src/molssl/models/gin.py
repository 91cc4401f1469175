"""GIN target model: edge-aware message passing, pooled readout, MLP head."""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from molssl.chem import ATOM_FEATURE_DIM, BOND_FEATURE_DIM
from molssl.errors import ConfigError, EmptyBatch, ShapeMismatch, ZeroDropoutWarning
from molssl.models.batch import GraphBatch
from molssl.tensorkit import SeededRng, Tensor, ops, parameter

READOUTS = ("mean", "sum", "attention")


@dataclass(frozen=True)
class TargetModelConfig:
    n_layers: int = 3
    node_hidden: int = 64
    edge_hidden: int = 64
    head_layers: int = 2
    dropout: float = 0.2
    readout: str = "mean"
    n_tasks: int = 1

    def __post_init__(self):
        if not 2 <= self.n_layers <= 6:
            raise ConfigError(f"n_layers must be in [2, 6], got {self.n_layers}")
        if not 32 <= self.node_hidden <= 512:
            raise ConfigError(f"node_hidden must be in [32, 512], got {self.node_hidden}")
        if not 64 <= self.edge_hidden <= 256:
            raise ConfigError(f"edge_hidden must be in [64, 256], got {self.edge_hidden}")
        if self.head_layers not in (1, 2):
            raise ConfigError(f"head_layers must be 1 or 2, got {self.head_layers}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.readout not in READOUTS:
            raise ConfigError(f"readout must be one of {READOUTS}, got {self.readout!r}")
        if self.n_tasks < 1:
            raise ConfigError("n_tasks must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def kaiming_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float = 2.0) -> np.ndarray:
    bound = np.sqrt(3.0 * gain / fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Module:
    """Named parameter container shared by the target and instructor models."""

    params: "OrderedDict[str, Tensor]"

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def named_parameters(self):
        return list(self.params.items())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) ^ set(state)
        if missing:
            raise ShapeMismatch("load_state_dict", tuple(sorted(missing)))
        for k, p in self.params.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ShapeMismatch(f"load_state_dict[{k}]", p.data.shape, arr.shape)
            p.data = arr.copy()

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())


class TargetModel(Module):
    """Graph isomorphism network f.

    Per layer ``l``: ``m_uv = relu(h_u + E_l e_uv)``, ``a_v = sum_u m_uv``,
    ``h_v <- dropout(relu(MLP_l((1 + eps_l) h_v + a_v)))``. Bond features go
    through one shared encoder before the per-layer projection ``E_l``.
    """

    kind = "target"

    def __init__(self, config: TargetModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        self._dropout_rng = SeededRng(seed).split("dropout")
        if config.dropout == 0.0:
            warnings.warn("dropout is 0; train mode is deterministic", ZeroDropoutWarning, stacklevel=2)
        rng = SeededRng(seed).stream("init", "target")
        d, de = config.node_hidden, config.edge_hidden
        p: OrderedDict[str, Tensor] = OrderedDict()

        def lin(name, fan_in, fan_out, gain=2.0):
            p[f"{name}.W"] = parameter(kaiming_uniform(rng, fan_in, fan_out, gain), f"{name}.W")
            p[f"{name}.b"] = parameter(np.zeros(fan_out), f"{name}.b")

        lin("atom_in", ATOM_FEATURE_DIM, d)
        lin("bond_in", BOND_FEATURE_DIM, de)
        for layer in range(config.n_layers):
            lin(f"gin{layer}.edge", de, d)
            p[f"gin{layer}.eps"] = parameter(np.zeros(()), f"gin{layer}.eps")
            lin(f"gin{layer}.mlp0", d, d, gain=1.0)
            lin(f"gin{layer}.mlp1", d, d, gain=1.0)
        if config.readout == "attention":
            p["readout.query"] = parameter(kaiming_uniform(rng, d, 1, 1.0), "readout.query")
        if config.head_layers == 2:
            lin("head0", d, d)
        # zero output layer: initial predictions sit at the normalized label mean
        p["head_out.W"] = parameter(np.zeros((d, config.n_tasks)), "head_out.W")
        p["head_out.b"] = parameter(np.zeros(config.n_tasks), "head_out.b")
        self.params = p

    def _linear(self, x: Tensor, name: str) -> Tensor:
        return ops.add(ops.matmul(x, self.params[f"{name}.W"]), self.params[f"{name}.b"])

    def _drop(self, x: Tensor, train: bool, key: tuple, *where) -> Tensor:
        if not train or self.config.dropout == 0.0:
            return x
        return ops.dropout(x, self.config.dropout, self._dropout_rng.stream(*key, *where), train=True)

    def embed(self, batch: GraphBatch, train: bool = False, key: tuple = ()) -> Tensor:
        """Per-graph embeddings, shape ``(n_graphs, node_hidden)``."""
        if batch.n_graphs == 0 or batch.n_atoms == 0:
            raise EmptyBatch("batch has no graphs")
        if batch.x.shape[1] != ATOM_FEATURE_DIM:
            raise ShapeMismatch("target_forward", batch.x.shape, (None, ATOM_FEATURE_DIM))
        if batch.edge_x.shape[1] != BOND_FEATURE_DIM:
            raise ShapeMismatch("target_forward", batch.edge_x.shape, (None, BOND_FEATURE_DIM))
        n = batch.n_atoms
        h = ops.relu(self._linear(Tensor(batch.x), "atom_in"))
        has_edges = batch.edge_src.size > 0
        if has_edges:
            e = ops.relu(self._linear(Tensor(batch.edge_x), "bond_in"))
        for layer in range(self.config.n_layers):
            z = ops.add(h, ops.mul(h, self.params[f"gin{layer}.eps"]))
            if has_edges:
                msg = ops.relu(ops.add(ops.index_gather(h, batch.edge_src),
                                       self._linear(e, f"gin{layer}.edge")))
                z = ops.add(z, ops.segment_sum(msg, batch.edge_dst, n))
            z = ops.relu(self._linear(z, f"gin{layer}.mlp0"))
            h = ops.relu(self._linear(z, f"gin{layer}.mlp1"))
            h = self._drop(h, train, key, "gin", layer)
        return self._readout(h, batch)

    def _readout(self, h: Tensor, batch: GraphBatch) -> Tensor:
        seg, k = batch.node_graph, batch.n_graphs
        mode = self.config.readout
        if mode == "sum":
            return ops.segment_sum(h, seg, k)
        if mode == "mean":
            return ops.segment_mean(h, seg, k)
        scores = ops.reshape(ops.matmul(h, self.params["readout.query"]), (-1,))
        alpha = ops.segment_softmax(scores, seg, k)
        return ops.segment_sum(ops.scale_rows(h, alpha), seg, k)

    def head(self, emb: Tensor, train: bool = False, key: tuple = ()) -> Tensor:
        z = emb
        if self.config.head_layers == 2:
            z = ops.relu(self._linear(z, "head0"))
            z = self._drop(z, train, key, "head")
        return self._linear(z, "head_out")

    def forward(self, batch: GraphBatch, train: bool = False, key: tuple = ()) -> tuple[Tensor, Tensor]:
        """Return ``(embeddings, predictions)``; predictions are ``(n_graphs, n_tasks)``.

        ``key`` labels the dropout draw, so two calls with the same key and
        seed drop the same units.
        """
        emb = self.embed(batch, train, key)
        return emb, self.head(emb, train, key)

    __call__ = forward

    def predict(self, batch: GraphBatch) -> np.ndarray:
        return self.forward(batch, train=False)[1].data


def target_forward(model: TargetModel, batch: GraphBatch, train_mode: bool = False,
                   key: tuple = ()) -> tuple[Tensor, Tensor]:
    return model.forward(batch, train=train_mode, key=key)
