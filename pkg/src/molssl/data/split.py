"""Scaffold and random train/val/test splits."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from molssl.data.dataset import MolDataset
from molssl.errors import ConfigError
from molssl.tensorkit import SeededRng

SPLIT_NAMES = ("train", "val", "test")


def _check_ratios(ratios) -> tuple[float, ...]:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    return ratios


def scaffold_groups(keys) -> list[tuple[str, list[int]]]:
    """Groups ordered by size (largest first), then by key."""
    groups: dict[str, list[int]] = defaultdict(list)
    for i, k in enumerate(keys):
        groups[k].append(i)
    return sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))


def scaffold_split_indices(keys, ratios=(0.8, 0.1, 0.1)) -> tuple[np.ndarray, ...]:
    """Assign whole scaffold groups, largest first, to the least-filled split.

    "Least filled" is relative to each split's target size, among splits the
    group still fits into; a group that fits nowhere goes to the split with
    the most room left. Ties go to the earlier split (train, val, test).
    """
    ratios = _check_ratios(ratios)
    n = len(keys)
    targets = [r * n for r in ratios]
    live = [s for s, t in enumerate(targets) if t > 0]
    parts: list[list[int]] = [[], [], []]
    for _, members in scaffold_groups(keys):
        fits = [s for s in live if len(parts[s]) + len(members) <= targets[s] + 1e-9]
        if fits:
            best = min(fits, key=lambda s: (len(parts[s]) / targets[s], s))
        else:
            best = min(live, key=lambda s: (len(parts[s]) - targets[s], s))
        parts[best].extend(members)
    return tuple(np.array(sorted(p), dtype=np.int64) for p in parts)


def random_split_indices(n: int, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> tuple[np.ndarray, ...]:
    ratios = _check_ratios(ratios)
    perm = SeededRng(seed).stream("random_split").permutation(n)
    n_train = int(round(ratios[0] * n))
    n_val = min(int(round(ratios[1] * n)), n - n_train)
    return (np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
            np.sort(perm[n_train + n_val:]))


@dataclass
class SplitReport:
    method: str
    sizes: dict[str, int]
    n_scaffolds: dict[str, int]
    disjoint: bool

    def to_dict(self) -> dict:
        return {"method": self.method, "sizes": self.sizes,
                "n_scaffolds": self.n_scaffolds, "scaffold_disjoint": self.disjoint}


def scaffold_overlap(*splits: MolDataset) -> set[str]:
    seen: dict[str, int] = {}
    shared = set()
    for k, ds in enumerate(splits):
        for key in set(ds.scaffolds):
            if key in seen and seen[key] != k:
                shared.add(key)
            seen[key] = k
    return shared


def split_report(method: str, splits) -> SplitReport:
    return SplitReport(
        method=method,
        sizes={name: len(ds) for name, ds in zip(SPLIT_NAMES, splits)},
        n_scaffolds={name: len(set(ds.scaffolds)) for name, ds in zip(SPLIT_NAMES, splits)},
        disjoint=not scaffold_overlap(*splits),
    )


def scaffold_split(dataset: MolDataset, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Deterministic greedy scaffold split; ``seed`` is accepted for API symmetry and unused."""
    idx = scaffold_split_indices(dataset.scaffolds, ratios)
    return tuple(dataset.subset(i, tag=name) for i, name in zip(idx, SPLIT_NAMES))


def random_split(dataset: MolDataset, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    idx = random_split_indices(len(dataset), ratios, seed)
    return tuple(dataset.subset(i, tag=name) for i, name in zip(idx, SPLIT_NAMES))
