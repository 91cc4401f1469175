"""Per-task label standardization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from molssl.errors import DegenerateLabels


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, labels: np.ndarray) -> "Normalizer":
        """Mean and population std per task, ignoring NaN entries."""
        y = np.asarray(labels, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        means, stds = [], []
        for t in range(y.shape[1]):
            col = y[~np.isnan(y[:, t]), t]
            if col.size < 2 or np.unique(col).size < 2:
                raise DegenerateLabels(f"task {t} needs at least two distinct labels")
            means.append(col.mean())
            stds.append(col.std())
        return cls(np.array(means), np.array(stds))

    @classmethod
    def identity(cls, n_tasks: int) -> "Normalizer":
        return cls(np.zeros(n_tasks), np.ones(n_tasks))

    def apply(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.mean) / self.std

    def invert(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


def fit_normalizer(train_labels: np.ndarray) -> Normalizer:
    return Normalizer.fit(train_labels)
