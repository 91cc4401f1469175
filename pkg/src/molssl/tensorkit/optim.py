"""Adam with decoupled weight decay, and learning-rate schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from molssl.errors import ShapeMismatch
from molssl.tensorkit.tensor import Tensor


@dataclass
class AdamState:
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState,
              lr: float = 1e-3, betas: tuple[float, float] = (0.9, 0.999),
              eps: float = 1e-8, weight_decay: float = 0.0) -> AdamState:
    """One in-place Adam update.

    Weight decay is decoupled and applied to the parameters before the moment
    update, so with a zero gradient a step moves ``theta`` by exactly
    ``-lr * weight_decay * theta``.
    """
    if len(params) != len(grads):
        raise ShapeMismatch("adam_step", (len(params),), (len(grads),))
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    b1, b2 = betas
    state.step += 1
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or m.shape != g.shape:
            raise ShapeMismatch("adam_step", p.shape, g.shape)
        if weight_decay:
            p.data -= lr * weight_decay * p.data
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return state


class Adam:
    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = AdamState()

    def step(self, grads: Sequence[np.ndarray], lr: float | None = None) -> None:
        adam_step(self.params, grads, self.state, self.lr if lr is None else lr,
                  self.betas, self.eps, self.weight_decay)


class WarmupPlateauSchedule:
    """Linear warmup over ``warmup_steps`` optimizer steps, then reduce-on-plateau.

    ``lr(step)`` gives the rate for an optimizer step; ``observe(metric)`` is
    called once per epoch with a validation metric (lower is better) and
    multiplies the rate by ``factor`` after ``patience`` epochs without a
    relative improvement of at least ``threshold``.
    """

    def __init__(self, base_lr: float, warmup_steps: int = 0, patience: int = 10,
                 factor: float = 0.5, threshold: float = 1e-4, min_lr: float = 1e-8):
        self.base_lr = base_lr
        self.warmup_steps = warmup_steps
        self.patience = patience
        self.factor = factor
        self.threshold = threshold
        self.min_lr = min_lr
        self.scale = 1.0
        self.best = math.inf
        self.bad_epochs = 0

    def lr(self, step: int) -> float:
        warm = 1.0
        if self.warmup_steps > 0 and step < self.warmup_steps:
            warm = (step + 1) / self.warmup_steps
        return max(self.base_lr * self.scale * warm, self.min_lr)

    def observe(self, metric: float) -> bool:
        """Record an epoch's metric; returns True when the rate was just reduced."""
        if math.isinf(self.best) or metric < self.best - self.threshold * abs(self.best):
            self.best = metric
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            self.scale *= self.factor
            self.bad_epochs = 0
            return True
        return False
