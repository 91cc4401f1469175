"""ROC-AUC, RMSE and MAE with masked multi-task averaging."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from molssl.errors import AllMasked, NoValidTask, SingleClass


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    boundaries = np.flatnonzero(np.diff(sorted_x)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [x.size]])
    avg = (starts + ends + 1) / 2.0   # mean of positions start+1 .. end
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def roc_auc(scores, labels) -> float:
    """Mann-Whitney U / (n_pos * n_neg) with average ranks for ties.

    Equals P(score+ > score-) + P(score+ == score-) / 2.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"need both classes, got {n_pos} positive and {n_neg} negative")
    ranks = _average_ranks(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _masked(preds, targets, mask):
    p = np.asarray(preds, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    m = ~np.isnan(t) if mask is None else np.asarray(mask).ravel().astype(bool)
    if not m.any():
        raise AllMasked("no unmasked entries")
    return p[m] - t[m]


def rmse(preds, targets, mask=None) -> float:
    d = _masked(preds, targets, mask)
    return float(np.sqrt(np.mean(d * d)))


def mae(preds, targets, mask=None) -> float:
    return float(np.mean(np.abs(_masked(preds, targets, mask))))


METRICS = {"roc_auc": roc_auc, "rmse": rmse, "mae": mae}
HIGHER_IS_BETTER = {"roc_auc": True, "rmse": False, "mae": False}


@dataclass
class MetricReport:
    metric: str
    per_task: list[float | None]
    counts: list[int]
    aggregate: float
    excluded: list[int] = field(default_factory=list)
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def aggregate_multitask(per_task: list[float | None], metric: str = "roc_auc",
                        counts: list[int] | None = None, seed: int | None = None) -> MetricReport:
    """Mean over tasks that produced a value; ``None`` marks an invalid task."""
    valid = [v for v in per_task if v is not None]
    if not valid:
        raise NoValidTask(f"no task produced a valid {metric}")
    return MetricReport(
        metric=metric,
        per_task=list(per_task),
        counts=list(counts) if counts is not None else [0] * len(per_task),
        aggregate=float(np.mean(valid)),
        excluded=[i for i, v in enumerate(per_task) if v is None],
        seed=seed,
    )


def evaluate(preds: np.ndarray, targets: np.ndarray, metric: str, seed: int | None = None) -> MetricReport:
    """Per-task metric on (n, n_tasks) arrays; NaN targets are masked.

    A classification task with a single class (or a regression task with no
    labels) is excluded from the aggregate and listed in ``excluded``.
    """
    fn = METRICS[metric]
    p = np.asarray(preds, dtype=np.float64).reshape(len(preds), -1)
    t = np.asarray(targets, dtype=np.float64).reshape(len(targets), -1)
    per_task, counts = [], []
    for k in range(t.shape[1]):
        m = ~np.isnan(t[:, k])
        counts.append(int(m.sum()))
        try:
            if metric == "roc_auc":
                per_task.append(fn(p[m, k], t[m, k]))
            else:
                per_task.append(fn(p[:, k], t[:, k], m))
        except (SingleClass, AllMasked):
            per_task.append(None)
    return aggregate_multitask(per_task, metric, counts, seed)


def write_curves_csv(rows, path) -> None:
    """Rows of (epoch, split, metric, value) for external plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "split", "metric", "value"])
        for row in rows:
            w.writerow(row)
