"""Comparison methods: pi-model, UPS thresholding, fingerprint KNN, and hybrid transfer."""

from __future__ import annotations

import math
import warnings

import numpy as np

from molssl.chem import circular_fingerprint
from molssl.data import HybridDatabase, MolDataset, MolPool, TaskSpec
from molssl.data.dataset import parse_many
from molssl.errors import (DegenerateHybrid, DegeneratePool, EmptyTrain, UnsupportedTask,
                           ZeroDropoutWarning)
from molssl.metrics import MetricReport, evaluate
from molssl.models import TargetModel
from molssl.tensorkit import ops
from molssl.tensorkit._kernels import tanimoto_matrix
from molssl.train.config import TrainConfig
from molssl.train.engine import (
    ConfidenceWeightedObjective,
    EpochReport,
    FixedPseudoObjective,
    RunArtifacts,
    StepTerms,
    TrainData,
    UnlabeledObjective,
    _finish,
    prepare_pool,
    pretrain_target,
    train_loop,
)
from molssl.train.losses import pseudo_weights

# --------------------------------------------------------------------------- pi-model


def rampup(epoch: int, rampup_epochs: int) -> float:
    """Sigmoid-shaped ramp ``exp(-5 (1 - t)^2)`` reaching 1 at ``rampup_epochs``."""
    if rampup_epochs <= 0:
        return 1.0
    t = min(epoch / rampup_epochs, 1.0)
    return math.exp(-5.0 * (1.0 - t) ** 2)


def consistency_loss(pred_a, pred_b):
    """Summed squared difference between two stochastic passes (both carry gradients)."""
    d = ops.sub(pred_a, pred_b)
    return ops.sum(ops.mul(d, d))


class PiModelObjective(UnlabeledObjective):
    """Two dropout passes per pool molecule, penalizing their disagreement."""

    def __init__(self, pool: MolPool, config: TrainConfig):
        self.pool = pool
        self.config = config
        self.weight = 0.0

    def on_epoch_start(self, f, epoch):
        self.weight = self.config.alpha * rampup(epoch, self.config.pi_rampup_epochs)
        return False

    def step(self, f, idx, ctx):
        batch = self.pool.store.batch(idx)
        key = (ctx.phase, ctx.epoch, ctx.step, "pool")
        _, pred_a = f.forward(batch, train=True, key=key + ("a",))
        _, pred_b = f.forward(batch, train=True, key=key + ("b",))
        return StepTerms(pseudo_loss=ops.mul(consistency_loss(pred_a, pred_b), self.weight))


def run_baseline_pi_model(f: TargetModel, data: TrainData, pool: MolPool | None, config: TrainConfig,
                          skip_pretrain: bool = False) -> RunArtifacts:
    """Supervised loss plus a ramped dropout-consistency term on the pool."""
    if config.dropout == 0:
        warnings.warn("dropout is 0: the consistency term is identically zero", ZeroDropoutWarning,
                      stacklevel=2)
    pool = prepare_pool(pool, data)
    if len(pool) == 0:
        raise DegeneratePool("the unlabeled pool is empty")
    epoch_log: list[EpochReport] = []
    pre = pretrain_target(f, data, config, epoch_log).best_value if not skip_pretrain else None
    stopper = train_loop(f, data, config, config.epochs, "joint", PiModelObjective(pool, config), epoch_log,
                         keep_initial=False)
    return _finish("pi-model", f, data, config, stopper, epoch_log, pretrain_best=pre)


# --------------------------------------------------------------------------- UPS


def ups_select(probs: np.ndarray, gamma1: float, gamma2: float) -> np.ndarray:
    """Hard labels where ``p >= gamma1`` (1) or ``p <= gamma2`` (0); NaN elsewhere."""
    probs = np.asarray(probs, dtype=np.float64)
    out = np.full(probs.shape, np.nan)
    out[probs >= gamma1] = 1.0
    out[probs <= gamma2] = 0.0
    return out


class UpsObjective(ConfidenceWeightedObjective):
    """Self-training restricted to confidently classified pool molecules, at weight ``alpha``."""

    def refresh(self, f, epoch):
        super().refresh(f, epoch)
        self.targets = ups_select(self.targets, self.config.ups_gamma1, self.config.ups_gamma2)
        self.n_selected = int((~np.isnan(self.targets)).sum())


def run_baseline_ups(f: TargetModel, data: TrainData, pool: MolPool | None, config: TrainConfig,
                     skip_pretrain: bool = False) -> RunArtifacts:
    if not data.classification:
        raise UnsupportedTask("UPS thresholding applies to classification tasks only")
    pool = prepare_pool(pool, data)
    if len(pool) == 0:
        raise DegeneratePool("the unlabeled pool is empty")
    epoch_log: list[EpochReport] = []
    pre = pretrain_target(f, data, config, epoch_log).best_value if not skip_pretrain else None
    objective = UpsObjective(pool, data, config, instructor=None, kind=config.loss_kind(True))
    stopper = train_loop(f, data, config, config.epochs, "joint", objective, epoch_log, keep_initial=False)
    return _finish("ups", f, data, config, stopper, epoch_log, pretrain_best=pre)


# --------------------------------------------------------------------------- fingerprint KNN


def fingerprint_matrix(graphs, radius: int = 2, n_bits: int = 2048) -> np.ndarray:
    return np.stack([circular_fingerprint(g, radius, n_bits).bits for g in graphs]) if graphs \
        else np.zeros((0, n_bits), dtype=bool)


def knn_predict(train_fp: np.ndarray, train_y: np.ndarray, query_fp: np.ndarray, k: int,
                classification: bool = False) -> np.ndarray:
    """Per task, average the labels of the ``k`` most Tanimoto-similar labeled molecules.

    Ties in similarity go to the lower training index. For classification the
    returned value is the positive fraction among the neighbours, so
    thresholding at 0.5 gives the majority vote.
    """
    if train_fp.shape[0] == 0:
        raise EmptyTrain("no training molecules")
    train_y = np.asarray(train_y, dtype=np.float64).reshape(len(train_y), -1)
    if k < 1:
        raise ValueError("k must be >= 1")
    sim = tanimoto_matrix(query_fp, train_fp)
    out = np.full((query_fp.shape[0], train_y.shape[1]), np.nan)
    for t in range(train_y.shape[1]):
        rows = np.flatnonzero(~np.isnan(train_y[:, t]))
        if rows.size == 0:
            continue
        kk = min(k, rows.size)
        order = np.argsort(-sim[:, rows], axis=1, kind="stable")[:, :kk]
        out[:, t] = train_y[rows[order], t].mean(axis=1)
    return out


def run_baseline_knn_fingerprint(train: MolDataset, test: MolDataset, k_neighbors: int = 5,
                                 radius: int = 2, n_bits: int = 2048, seed: int | None = None) -> MetricReport:
    if len(train) == 0:
        raise EmptyTrain("no training molecules")
    classification = train.task.is_classification
    pred = knn_predict(fingerprint_matrix(train.graphs, radius, n_bits), train.labels,
                       fingerprint_matrix(test.graphs, radius, n_bits), k_neighbors, classification)
    return evaluate(pred, test.labels, "roc_auc" if classification else "rmse", seed=seed)


# --------------------------------------------------------------------------- hybrid transfer


def hybrid_training_sets(db: HybridDatabase, task: TaskSpec, task_names) -> tuple[MolDataset, MolPool, np.ndarray]:
    """Split a hybrid database into its labeled rows and its pseudo rows.

    Rows whose SMILES no longer parse are skipped on both sides.
    """
    lab = np.flatnonzero(~db.is_pseudo)
    pse = np.flatnonzero(db.is_pseudo)
    keep_l, graphs_l = parse_many([db.smiles[i] for i in lab])
    keep_p, graphs_p = parse_many([db.smiles[i] for i in pse])
    lab, pse = lab[keep_l], pse[keep_p]
    train = MolDataset([db.smiles[i] for i in lab], graphs_l, db.labels[lab], task, list(task_names), tag="train")
    pool = MolPool([db.smiles[i] for i in pse], graphs_p)
    return train, pool, pse


def train_from_hybrid(f: TargetModel, db: HybridDatabase, data: TrainData, config: TrainConfig,
                      weighting: str = "confidence") -> RunArtifacts:
    """Train ``f`` from scratch on a saved hybrid database.

    Labeled rows form the training split (the normalizer is refitted on
    them); pseudo rows are weighted ``alpha * (2p - 1)`` (``"confidence"``)
    or ``alpha`` (``"alpha"``). ``data`` supplies the validation and test splits.
    """
    if weighting not in ("confidence", "alpha"):
        raise ValueError(f"weighting must be 'confidence' or 'alpha', got {weighting!r}")
    if db.n_labeled == 0:
        raise DegenerateHybrid("the hybrid database has no labeled rows")
    train, pool, rows = hybrid_training_sets(db, data.train.task, data.train.task_names)
    hdata = TrainData(train, data.val, data.test)
    labels = db.labels[rows]
    targets = labels if hdata.classification else hdata.normalizer.apply(labels)
    if weighting == "confidence":
        weights = pseudo_weights(db.confidence[rows], config.alpha, config.floor_pseudo_weight_at_zero)
    else:
        weights = np.full(labels.shape, config.alpha)
    epoch_log: list[EpochReport] = []
    objective = FixedPseudoObjective(pool, targets, weights) if len(pool) else None
    stopper = train_loop(f, hdata, config, config.pretrain_f_epochs, "hybrid", objective, epoch_log)
    return _finish("from-hybrid", f, hdata, config, stopper, epoch_log)
