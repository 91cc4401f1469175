"""Per-sample task losses and the two training objectives.

All objectives are sums over samples (and observed tasks), not means.
"""

from __future__ import annotations

import numpy as np

from molssl.tensorkit import Tensor, ops


def per_sample_loss(pred: Tensor, target: np.ndarray, kind: str) -> tuple[Tensor, np.ndarray]:
    """Elementwise loss H and the observed-entry mask; NaN targets are masked."""
    target = np.asarray(target, dtype=np.float64)
    mask = ~np.isnan(target)
    safe = np.where(mask, target, 0.0)
    if kind == "mse":
        h = ops.squared_error(pred, safe)
    elif kind == "mae":
        h = ops.abs_error(pred, safe)
    elif kind == "bce":
        h = ops.bce_with_logits(pred, safe)
    else:
        raise ValueError(f"unknown loss kind {kind!r}")
    return h, mask.astype(np.float64)


def pseudo_weights(p_pseudo: np.ndarray, alpha: float, floor_at_zero: bool = False) -> np.ndarray:
    """``alpha * (2p - 1)``; negative weights are kept unless ``floor_at_zero``."""
    w = alpha * (2.0 * np.asarray(p_pseudo, dtype=np.float64) - 1.0)
    return np.maximum(w, 0.0) if floor_at_zero else w


def labeled_weights(p_labeled: np.ndarray | None, shape, lam: float) -> np.ndarray:
    if lam > 0 and p_labeled is not None:
        return 1.0 + lam * np.asarray(p_labeled, dtype=np.float64)
    return np.ones(shape)


def target_loss(h_lab: Tensor, mask_lab: np.ndarray, h_pse: Tensor | None = None,
                mask_pse: np.ndarray | None = None, w_pse: np.ndarray | None = None,
                w_lab: np.ndarray | None = None) -> Tensor:
    """``sum_lab w_i H_i + sum_pseudo w_j H_j``; every weight is a constant.

    ``w_pse`` already includes the balance weight (see :func:`pseudo_weights`).
    """
    wl = mask_lab if w_lab is None else mask_lab * w_lab
    total = ops.sum(ops.mul(h_lab, wl))
    if h_pse is not None:
        total = ops.add(total, ops.sum(ops.mul(h_pse, mask_pse * w_pse)))
    return total


def instructor_loss(logits: Tensor, observed: np.ndarray, mask: np.ndarray) -> Tensor:
    """Summed BCE between ``sigmoid(logits)`` and the observability mask c.

    ``observed`` is per row; it is broadcast over tasks and masked entries
    (tasks without a label) are skipped.
    """
    c = np.broadcast_to(np.asarray(observed, dtype=np.float64).reshape(-1, 1), logits.shape)
    return ops.sum(ops.mul(ops.bce_with_logits(logits, np.ascontiguousarray(c)), mask))
