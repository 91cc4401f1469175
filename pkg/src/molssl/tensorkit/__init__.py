"""Minimal f64 tensors with reverse-mode autodiff, Adam, and checkpoints."""

from molssl.tensorkit import ops
from molssl.tensorkit._kernels import USE_NUMBA
from molssl.tensorkit.checkpoint import load_arrays, save_arrays
from molssl.tensorkit.gradcheck import GradCheckReport, grad_check
from molssl.tensorkit.optim import Adam, AdamState, WarmupPlateauSchedule, adam_step
from molssl.tensorkit.rng import SeededRng
from molssl.tensorkit.tensor import (
    Tape,
    Tensor,
    active_tape,
    as_tensor,
    backward,
    inject_gradient_fault,
    parameter,
)

__all__ = [
    "Adam",
    "AdamState",
    "GradCheckReport",
    "SeededRng",
    "Tape",
    "Tensor",
    "USE_NUMBA",
    "WarmupPlateauSchedule",
    "active_tape",
    "adam_step",
    "as_tensor",
    "backward",
    "grad_check",
    "inject_gradient_fault",
    "load_arrays",
    "ops",
    "parameter",
    "save_arrays",
]
