"""Training loops: supervised pretraining, instructor pretraining and the joint
confidence-weighted pseudo-labeling loop, plus shared plumbing.

Every epoch walks the labeled training set in shuffled batches. When an
unlabeled objective is attached, the shuffled pool is cut into as many
chunks as there are labeled batches and each step pairs one labeled batch
with one pool chunk, so every batch keeps the global labeled:pseudo ratio.
Labeled and pool molecules go through separate forward passes with their
own dropout streams; with a zero pool weight the labeled gradient is
therefore bit-identical to plain supervised training.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from molssl.data import MolDataset, MolPool, Normalizer, PseudoLabels, build_hybrid
from molssl.data.hybrid import HybridDatabase
from molssl.errors import DegenerateHybrid, DegeneratePool, NonFiniteLoss
from molssl.metrics import HIGHER_IS_BETTER, evaluate
from molssl.models import ConstantInstructor, InstructorConfig, InstructorModel, TargetModel
from molssl.models.batch import GraphStore
from molssl.models.instructor import instructor_features
from molssl.tensorkit import Adam, SeededRng, Tape, WarmupPlateauSchedule, backward, ops
from molssl.train.config import TrainConfig
from molssl.train.losses import (
    instructor_loss,
    labeled_weights,
    per_sample_loss,
    pseudo_weights,
    target_loss,
)

log = logging.getLogger(__name__)

PROB_CLIP = 1e-12


# --------------------------------------------------------------------------- data


@dataclass
class TrainData:
    """Labeled splits plus the label normalizer fitted on the training split."""

    train: MolDataset
    val: MolDataset
    test: MolDataset | None = None
    normalizer: Normalizer | None = None

    def __post_init__(self):
        if self.normalizer is None:
            n_tasks = self.train.task.n_tasks
            self.normalizer = (Normalizer.identity(n_tasks) if self.classification
                               else Normalizer.fit(self.train.labels))

    @property
    def classification(self) -> bool:
        return self.train.task.is_classification

    @property
    def n_tasks(self) -> int:
        return self.train.task.n_tasks

    @property
    def metric(self) -> str:
        return "roc_auc" if self.classification else "rmse"

    def targets(self, ds: MolDataset) -> np.ndarray:
        return self.normalizer.apply(ds.labels)


# --------------------------------------------------------------------------- reports


@dataclass
class EpochReport:
    phase: str
    epoch: int
    loss_f: float
    val_metric: float
    lr: float
    loss_g: float | None = None
    mean_p_pseudo: float | None = None
    frac_p_above_half: float | None = None
    refreshed: bool = False
    n_pseudo: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunArtifacts:
    mode: str
    model: TargetModel
    normalizer: Normalizer
    config: TrainConfig
    metric: str
    best_val: float
    best_epoch: int
    stopped_epoch: int
    epoch_log: list[EpochReport] = field(default_factory=list)
    instructor: object | None = None
    hybrid: HybridDatabase | None = None
    test_metric: float | None = None
    pretrain_best_val: float | None = None
    data: TrainData | None = None


# --------------------------------------------------------------------------- helpers


def model_digest(model) -> str:
    h = hashlib.blake2b(digest_size=6)
    for name, p in model.named_parameters():
        h.update(name.encode())
        h.update(np.ascontiguousarray(p.data).tobytes())
    return h.hexdigest()


def predict_raw(f: TargetModel, store: GraphStore, batch_size: int = 512) -> np.ndarray:
    """Eval-mode head outputs (normalized values or logits), shape (n, n_tasks)."""
    n = len(store)
    out = []
    for start in range(0, n, batch_size):
        out.append(f.forward(store.batch(np.arange(start, min(start + batch_size, n))), train=False)[1].data)
    return np.concatenate(out) if out else np.zeros((0, f.config.n_tasks))


def to_label_units(raw: np.ndarray, data: TrainData) -> np.ndarray:
    """Predictions in the units metrics are computed in."""
    if data.classification:
        return ops._sigmoid(raw)
    return data.normalizer.invert(raw)


def evaluate_model(f: TargetModel, ds: MolDataset, data: TrainData, batch_size: int = 512) -> float:
    preds = to_label_units(predict_raw(f, ds.store, batch_size), data)
    return evaluate(preds, ds.labels, data.metric).aggregate


def _score(value: float, metric: str) -> float:
    """Lower is better."""
    return -value if HIGHER_IS_BETTER[metric] else value


def _check_finite(value: float, what: str, epoch: int, step: int) -> None:
    if not math.isfinite(value):
        raise NonFiniteLoss(what, epoch, step)


class _Optimizer:
    def __init__(self, params, lr, weight_decay, warmup_steps, patience):
        self.adam = Adam(params, lr=lr, weight_decay=weight_decay)
        self.schedule = WarmupPlateauSchedule(lr, warmup_steps=warmup_steps, patience=patience)
        self.steps = 0

    @property
    def lr(self) -> float:
        return self.schedule.lr(self.steps)

    def step(self, grads) -> None:
        self.adam.step(grads, lr=self.schedule.lr(self.steps))
        self.steps += 1


class _EarlyStopper:
    """Keeps the best state seen so far (the starting state until an epoch is scored)."""

    def __init__(self, model, patience: int):
        self.model = model
        self.patience = patience
        self.best_score = math.inf
        self.best_value = math.nan
        self.best_epoch = -1
        self.best_state = model.state_dict()
        self.bad = 0
        self.stopped_epoch = -1

    def update(self, epoch: int, value: float, score: float) -> bool:
        if score < self.best_score:
            self.best_score, self.best_value, self.best_epoch = score, value, epoch
            self.best_state = self.model.state_dict()
            self.bad = 0
            return False
        self.bad += 1
        return self.bad > self.patience if self.patience > 0 else False

    def restore(self) -> None:
        self.model.load_state_dict(self.best_state)


def _steps_per_epoch(n_labeled: int, batch_size: int) -> int:
    return max(1, math.ceil(n_labeled / batch_size))


# --------------------------------------------------------------------------- pseudo-labels


def assign_pseudo_labels(f: TargetModel, pool: MolPool, data: TrainData, epoch: int = 0,
                         batch_size: int = 512, hard: bool = False) -> tuple[np.ndarray, PseudoLabels]:
    """Label every pool molecule with ``f`` in eval mode.

    Returns the training targets (normalized values, or probabilities for
    classification) and a :class:`PseudoLabels` record in label units.
    """
    raw = predict_raw(f, pool.store, batch_size)
    if data.classification:
        targets = np.clip(ops._sigmoid(raw), PROB_CLIP, 1.0 - PROB_CLIP)
        if hard:
            targets = (targets >= 0.5).astype(np.float64)
        values = targets
    else:
        targets = raw
        values = data.normalizer.invert(raw)
    record = PseudoLabels(list(pool.smiles), values, epoch, f"f{epoch}-{model_digest(f)}")
    return targets, record


# --------------------------------------------------------------------------- unlabeled objectives


@dataclass
class StepContext:
    phase: str
    epoch: int
    step: int
    emb_lab: np.ndarray
    h_lab: np.ndarray
    mask_lab: np.ndarray
    y_lab: np.ndarray
    kind: str


@dataclass
class StepTerms:
    pseudo_loss: object | None = None     # Tensor added to L_f
    w_lab: np.ndarray | None = None
    instructor_loss: object | None = None  # Tensor, gradients go to the instructor only
    p_pseudo: np.ndarray | None = None


class UnlabeledObjective:
    """Base class: contributes a pool term to each training step."""

    pool: MolPool
    instructor = None

    def on_epoch_start(self, f: TargetModel, epoch: int) -> bool:
        return False

    def step(self, f: TargetModel, idx: np.ndarray, ctx: StepContext) -> StepTerms:
        raise NotImplementedError

    def on_epoch_end(self) -> dict:
        return {}


class ConfidenceWeightedObjective(UnlabeledObjective):
    """Pseudo-labels refreshed every ``k`` epochs, weighted by ``alpha * (2p - 1)``.

    ``instructor=None`` fixes every weight at ``alpha`` (plain self-training).
    """

    def __init__(self, pool: MolPool, data: TrainData, config: TrainConfig,
                 instructor=None, kind: str = "mse"):
        self.pool = pool
        self.data = data
        self.config = config
        self.instructor = instructor
        self.kind = kind
        self.targets: np.ndarray | None = None
        self.record: PseudoLabels | None = None
        self.last_p = np.full((len(pool), data.n_tasks), math.nan)
        self._epoch_p: list[np.ndarray] = []

    def refresh(self, f: TargetModel, epoch: int) -> None:
        self.targets, self.record = assign_pseudo_labels(
            f, self.pool, self.data, epoch, self.config.eval_batch_size, self.config.hard_pseudo_labels)

    def on_epoch_start(self, f, epoch):
        self._epoch_p = []
        if epoch % self.config.update_every == 0 or self.targets is None:
            self.refresh(f, epoch)
            return True
        return False

    def _confidences(self, emb_p, y_p, h_p, ctx: StepContext):
        """Instructor scores for the labeled batch and the pool chunk, plus L_g."""
        g = self.instructor
        n_lab = ctx.emb_lab.shape[0]
        if isinstance(g, InstructorModel):
            feats = np.concatenate([
                instructor_features(ctx.emb_lab, ctx.y_lab, ctx.h_lab),
                instructor_features(emb_p, y_p, h_p),
            ])
            logits = g.logits(feats)
            p = ops._sigmoid(logits.data)
            c = np.concatenate([np.ones(n_lab), np.zeros(emb_p.shape[0])])
            mask = np.concatenate([ctx.mask_lab, np.ones_like(h_p)])
            return p[:n_lab], p[n_lab:], instructor_loss(logits, c, mask)
        p_lab = g.confidence(ctx.emb_lab, ctx.y_lab, ctx.h_lab)
        p_pse = g.confidence(emb_p, y_p, h_p)
        return p_lab, p_pse, None

    def step(self, f, idx, ctx):
        batch = self.pool.store.batch(idx)
        emb, pred = f.forward(batch, train=True, key=(ctx.phase, ctx.epoch, ctx.step, "pool"))
        y_p = self.targets[idx]
        h_p, m_p = per_sample_loss(pred, y_p, ctx.kind)
        cfg = self.config
        if self.instructor is None:
            w_p = np.full(h_p.shape, cfg.alpha)
            self._epoch_p.append(np.ones(h_p.shape))
            return StepTerms(pseudo_loss=target_loss_pool(h_p, m_p, w_p))
        p_lab, p_pse, l_g = self._confidences(emb.data, y_p, h_p.data, ctx)
        self.last_p[idx] = p_pse
        self._epoch_p.append(p_pse)
        w_p = pseudo_weights(p_pse, cfg.alpha, cfg.floor_pseudo_weight_at_zero)
        w_l = labeled_weights(p_lab, ctx.h_lab.shape, cfg.lam)
        return StepTerms(pseudo_loss=target_loss_pool(h_p, m_p, w_p), w_lab=w_l,
                         instructor_loss=l_g, p_pseudo=p_pse)

    def on_epoch_end(self):
        if not self._epoch_p:
            return {}
        p = np.concatenate(self._epoch_p)
        return {"mean_p_pseudo": float(p.mean()), "frac_p_above_half": float((p > 0.5).mean())}

    def hybrid(self, train: MolDataset) -> HybridDatabase | None:
        if self.record is None:
            return None
        rec = self.record
        if self.instructor is None:
            rec.confidence = np.ones_like(rec.values)
        else:
            rec.confidence = np.where(np.isnan(self.last_p), 0.5, self.last_p)
        return build_hybrid(train, rec)


def target_loss_pool(h, mask, w):
    return ops.sum(ops.mul(h, mask * w))


class FixedPseudoObjective(UnlabeledObjective):
    """Pool term with frozen targets and weights (training from a saved hybrid database)."""

    def __init__(self, pool: MolPool, targets: np.ndarray, weights: np.ndarray):
        self.pool = pool
        self.targets = targets
        self.weights = weights

    def step(self, f, idx, ctx):
        _, pred = f.forward(self.pool.store.batch(idx), train=True, key=(ctx.phase, ctx.epoch, ctx.step, "pool"))
        h, m = per_sample_loss(pred, self.targets[idx], ctx.kind)
        return StepTerms(pseudo_loss=target_loss_pool(h, m, self.weights[idx]))


# --------------------------------------------------------------------------- main loop


def _pool_chunks(rng: SeededRng, phase: str, epoch: int, rows, n_steps: int, per_step: int = 0):
    """Pool indices for each step of one epoch.

    ``per_step == 0`` splits a permutation of all rows evenly over the steps;
    otherwise each step gets ``per_step`` rows, wrapping around the
    permutation if the pool is smaller than ``n_steps * per_step``.
    """
    order = rng.stream("order", phase, "pool", epoch).permutation(rows)
    if per_step == 0:
        return np.array_split(order, n_steps)
    take = np.resize(order, n_steps * per_step) if order.size else order
    return [take[i * per_step:(i + 1) * per_step] for i in range(n_steps)]


def train_loop(f: TargetModel, data: TrainData, config: TrainConfig, epochs: int, phase: str,
               objective: UnlabeledObjective | None = None, epoch_log: list | None = None,
               patience: int | None = None, keep_initial: bool = True) -> _EarlyStopper:
    """Optimize f for up to ``epochs`` epochs with early stopping on validation.

    The best-validation parameters are restored into ``f`` before returning.
    With ``keep_initial=False`` the incoming state is not a candidate, so the
    result is the best epoch of this loop.
    """
    kind = config.loss_kind(data.classification)
    rng = SeededRng(config.seed)
    train = data.train
    y_train = data.targets(train)
    n = len(train)
    n_steps = _steps_per_epoch(n, config.batch_size)
    opt = _Optimizer(f.parameters(), config.lr, config.weight_decay,
                     int(config.warmup_ratio * epochs * n_steps), config.plateau_patience)
    g = objective.instructor if objective is not None else None
    g_opt = (Adam(g.parameters(), lr=config.instructor_lr, weight_decay=config.weight_decay)
             if isinstance(g, InstructorModel) else None)
    stopper = _EarlyStopper(f, config.early_stop_patience if patience is None else patience)
    if keep_initial or epochs == 0:
        value = evaluate_model(f, data.val, data, config.eval_batch_size)
        stopper.update(-1, value, _score(value, data.metric))
    epoch_log = epoch_log if epoch_log is not None else []

    for epoch in range(epochs):
        stopper.stopped_epoch = epoch
        refreshed = objective.on_epoch_start(f, epoch) if objective is not None else False
        order = rng.stream("order", phase, "labeled", epoch).permutation(n)
        lab_chunks = [order[i:i + config.batch_size] for i in range(0, n, config.batch_size)]
        pool_chunks = (_pool_chunks(rng, phase, epoch, len(objective.pool), n_steps,
                                    config.pool_batch_size)
                       if objective is not None and len(objective.pool) else None)
        sum_f, sum_g = 0.0, 0.0
        for step, idx in enumerate(lab_chunks):
            with Tape() as tape:
                emb, pred = f.forward(train.store.batch(idx), train=True, key=(phase, epoch, step, "labeled"))
                h_lab, m_lab = per_sample_loss(pred, y_train[idx], kind)
                terms = StepTerms()
                if pool_chunks is not None and pool_chunks[step].size:
                    ctx = StepContext(phase, epoch, step, emb.data, h_lab.data, m_lab, y_train[idx], kind)
                    terms = objective.step(f, pool_chunks[step], ctx)
                loss_f = target_loss(h_lab, m_lab, w_lab=terms.w_lab)
                if terms.pseudo_loss is not None:
                    loss_f = ops.add(loss_f, terms.pseudo_loss)
            _check_finite(loss_f.item(), "target loss", epoch, step)
            grads_f = backward(tape, loss_f, f.parameters())
            if terms.instructor_loss is not None:
                _check_finite(terms.instructor_loss.item(), "instructor loss", epoch, step)
                g_opt.step(backward(tape, terms.instructor_loss, g.parameters()))
                sum_g += terms.instructor_loss.item()
            opt.step(grads_f)
            sum_f += loss_f.item()

        value = evaluate_model(f, data.val, data, config.eval_batch_size)
        if not math.isfinite(value):
            raise NonFiniteLoss("validation metric", epoch)
        score = _score(value, data.metric)
        lr = opt.lr
        opt.schedule.observe(score)
        extra = objective.on_epoch_end() if objective is not None else {}
        report = EpochReport(phase=phase, epoch=epoch, loss_f=sum_f, val_metric=value, lr=lr,
                             loss_g=sum_g if g_opt is not None else None, refreshed=refreshed,
                             n_pseudo=len(objective.pool) if objective is not None else 0, **extra)
        epoch_log.append(report)
        log.debug("%s epoch %d L_f=%.4f val %s=%.4f", phase, epoch, sum_f, data.metric, value)
        if stopper.update(epoch, value, score):
            break
    stopper.restore()
    return stopper


# --------------------------------------------------------------------------- phases


def pretrain_target(f: TargetModel, data: TrainData, config: TrainConfig,
                    epoch_log: list | None = None) -> _EarlyStopper:
    """Supervised training for ``pretrain_f_epochs``; f ends at its best-validation state."""
    return train_loop(f, data, config, config.pretrain_f_epochs, "pretrain_f", None, epoch_log)


def instructor_inputs(f: TargetModel, store: GraphStore, targets: np.ndarray, kind: str,
                      key: tuple, batch_size: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Features for g (embedding, label, loss) from f in train mode, and the label mask."""
    feats, masks = [], []
    n = len(store)
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        emb, pred = f.forward(store.batch(idx), train=True, key=key + (start,))
        h, m = per_sample_loss(pred, targets[idx], kind)
        feats.append(instructor_features(emb.data, targets[idx], h.data))
        masks.append(m)
    return np.concatenate(feats), np.concatenate(masks)


def fit_instructor(g: InstructorModel, features: np.ndarray, observed: np.ndarray, mask: np.ndarray,
                   config: TrainConfig, epochs: int | None = None, val_fraction: float = 0.1,
                   epoch_log: list | None = None) -> float:
    """Train g to separate true labels (c=1) from pseudo-labels (c=0).

    A stratified ``val_fraction`` of rows is held out; g ends at the state
    with the lowest held-out mean BCE, which is returned.
    """
    observed = np.asarray(observed, dtype=np.float64)
    lab = np.flatnonzero(observed == 1)
    pse = np.flatnonzero(observed == 0)
    if lab.size == 0 or pse.size == 0:
        raise DegenerateHybrid(f"need both kinds of rows, got {lab.size} labeled and {pse.size} pseudo")
    epochs = config.pretrain_g_epochs if epochs is None else epochs
    rng = SeededRng(config.seed)
    split = rng.stream("instructor_holdout")
    lab, pse = split.permutation(lab), split.permutation(pse)
    n_val_l = int(round(val_fraction * lab.size)) if lab.size > 1 else 0
    n_val_p = int(round(val_fraction * pse.size)) if pse.size > 1 else 0
    val_idx = np.concatenate([lab[:n_val_l], pse[:n_val_p]])
    lab_tr, pse_tr = lab[n_val_l:], pse[n_val_p:]
    if val_idx.size == 0:
        val_idx = np.concatenate([lab_tr, pse_tr])
    opt = Adam(g.parameters(), lr=config.instructor_lr, weight_decay=config.weight_decay)

    def val_bce() -> float:
        logits = g.logits(features[val_idx])
        return instructor_loss(logits, observed[val_idx], mask[val_idx]).item() / max(mask[val_idx].sum(), 1.0)

    best, best_state, bad = val_bce(), g.state_dict(), 0
    n_steps = _steps_per_epoch(lab_tr.size, config.batch_size)
    for epoch in range(epochs):
        lab_order = rng.stream("order", "pretrain_g", "labeled", epoch).permutation(lab_tr)
        pse_chunks = _pool_chunks(rng, "pretrain_g", epoch, pse_tr, n_steps, config.pool_batch_size)
        total = 0.0
        for step in range(n_steps):
            rows = np.concatenate([lab_order[step * config.batch_size:(step + 1) * config.batch_size],
                                   pse_chunks[step]])
            with Tape() as tape:
                loss = instructor_loss(g.logits(features[rows]), observed[rows], mask[rows])
            _check_finite(loss.item(), "instructor loss", epoch, step)
            opt.step(backward(tape, loss, g.parameters()))
            total += loss.item()
        current = val_bce()
        if epoch_log is not None:
            epoch_log.append(EpochReport(phase="pretrain_g", epoch=epoch, loss_f=0.0, val_metric=current,
                                         lr=config.instructor_lr, loss_g=total))
        if current < best:
            best, best_state, bad = current, g.state_dict(), 0
        else:
            bad += 1
            if config.early_stop_patience and bad > config.early_stop_patience:
                break
    g.load_state_dict(best_state)
    return best


def pretrain_instructor(g: InstructorModel, f0: TargetModel, data: TrainData, pool: MolPool,
                        config: TrainConfig, epoch_log: list | None = None) -> float:
    """Fit g on the hybrid of f0's training labels and its pseudo-labels; f0 is frozen."""
    if len(pool) == 0:
        raise DegenerateHybrid("instructor pretraining needs pseudo-labeled rows")
    kind = config.loss_kind(data.classification)
    pseudo_targets, _ = assign_pseudo_labels(f0, pool, data, 0, config.eval_batch_size,
                                             config.hard_pseudo_labels)
    fl, ml = instructor_inputs(f0, data.train.store, data.targets(data.train), kind,
                               ("pretrain_g", "labeled"), config.eval_batch_size)
    fp, mp = instructor_inputs(f0, pool.store, pseudo_targets, kind,
                               ("pretrain_g", "pool"), config.eval_batch_size)
    features = np.concatenate([fl, fp])
    observed = np.concatenate([np.ones(len(fl)), np.zeros(len(fp))])
    return fit_instructor(g, features, observed, np.concatenate([ml, mp]), config, epoch_log=epoch_log)


def new_target_model(data: TrainData, config: TrainConfig) -> TargetModel:
    import warnings

    from molssl.errors import ZeroDropoutWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroDropoutWarning)
        return TargetModel(config.model_config(data.n_tasks), seed=config.seed)


def new_instructor(data: TrainData, config: TrainConfig) -> InstructorModel:
    return InstructorModel(InstructorConfig(config.node_hidden, data.n_tasks, config.node_hidden),
                           seed=config.seed)


def prepare_pool(pool: MolPool | None, data: TrainData) -> MolPool:
    """Drop pool molecules that are also in the labeled training split."""
    if pool is None:
        return MolPool([], [])
    clean, removed = pool.without(set(data.train.smiles))
    if removed:
        log.info("dropped %d pool molecules that are already labeled", removed)
    return clean


def _finish(mode, f, data, config, stopper, epoch_log, instructor=None, hybrid=None,
            pretrain_best=None) -> RunArtifacts:
    test = evaluate_model(f, data.test, data, config.eval_batch_size) if data.test is not None else None
    return RunArtifacts(mode=mode, model=f, normalizer=data.normalizer, config=config, metric=data.metric,
                        best_val=stopper.best_value, best_epoch=stopper.best_epoch,
                        stopped_epoch=stopper.stopped_epoch, epoch_log=epoch_log, instructor=instructor,
                        hybrid=hybrid, test_metric=test, pretrain_best_val=pretrain_best, data=data)


# --------------------------------------------------------------------------- runs


def run_supervised(f: TargetModel, data: TrainData, config: TrainConfig,
                   skip_pretrain: bool = False) -> RunArtifacts:
    """Pretraining followed by the same number of joint-phase epochs without a pool."""
    epoch_log: list[EpochReport] = []
    pre = None
    if not skip_pretrain:
        pre = pretrain_target(f, data, config, epoch_log).best_value
    stopper = train_loop(f, data, config, config.epochs, "joint", None, epoch_log,
                         keep_initial=False)
    return _finish("supervised", f, data, config, stopper, epoch_log, pretrain_best=pre)


def run_instructbio(f: TargetModel, g, data: TrainData, pool: MolPool | None, config: TrainConfig,
                    skip_pretrain_f: bool = False, skip_pretrain_g: bool = False,
                    allow_empty_pool: bool = False) -> RunArtifacts:
    """Confidence-weighted pseudo-labeling with an instructor.

    ``g`` may be an :class:`InstructorModel` or a fixed-confidence stand-in.
    """
    pool = prepare_pool(pool, data)
    if len(pool) == 0 and not allow_empty_pool:
        raise DegeneratePool("the unlabeled pool is empty")
    epoch_log: list[EpochReport] = []
    pre = None
    if not skip_pretrain_f:
        pre = pretrain_target(f, data, config, epoch_log).best_value
    if isinstance(g, InstructorModel) and not skip_pretrain_g and len(pool):
        pretrain_instructor(g, f, data, pool, config, epoch_log)
    kind = config.loss_kind(data.classification)
    objective = ConfidenceWeightedObjective(pool, data, config, instructor=g, kind=kind)
    stopper = train_loop(f, data, config, config.epochs, "joint", objective if len(pool) else None, epoch_log,
                         keep_initial=False)
    hybrid = objective.hybrid(data.train) if len(pool) else build_hybrid(data.train, None)
    return _finish("instructbio", f, data, config, stopper, epoch_log, instructor=g, hybrid=hybrid,
                   pretrain_best=pre)


def run_baseline_naive_pl(f: TargetModel, data: TrainData, pool: MolPool | None, config: TrainConfig,
                          skip_pretrain: bool = False) -> RunArtifacts:
    """Self-training: every pseudo-labeled molecule gets weight ``alpha``."""
    pool = prepare_pool(pool, data)
    if len(pool) == 0:
        raise DegeneratePool("the unlabeled pool is empty")
    epoch_log: list[EpochReport] = []
    pre = None
    if not skip_pretrain:
        pre = pretrain_target(f, data, config, epoch_log).best_value
    objective = ConfidenceWeightedObjective(pool, data, config, instructor=None,
                                            kind=config.loss_kind(data.classification))
    stopper = train_loop(f, data, config, config.epochs, "joint", objective, epoch_log,
                         keep_initial=False)
    return _finish("naive-pl", f, data, config, stopper, epoch_log, hybrid=objective.hybrid(data.train),
                   pretrain_best=pre)


def constant_instructor(value: float, data: TrainData) -> ConstantInstructor:
    return ConstantInstructor(value, data.n_tasks)
