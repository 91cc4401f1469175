"""Labeled datasets, unlabeled pools, and their loaders."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from molssl.chem import MolGraph, parse_smiles, scaffold_key
from molssl.errors import ConfigError, EmptyDataset, MissingColumn, SizeExceedsPool, SmilesError
from molssl.models.batch import GraphStore
from molssl.tensorkit import SeededRng

MISSING = math.nan
TASK_KINDS = ("regression", "classification")


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "regression"
    n_tasks: int = 1
    missing: float = MISSING  # sentinel written into label arrays; always NaN

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ConfigError(f"task kind must be one of {TASK_KINDS}, got {self.kind!r}")
        if self.n_tasks < 1:
            raise ConfigError("n_tasks must be >= 1")

    @property
    def is_classification(self) -> bool:
        return self.kind == "classification"


def parse_many(smiles: Sequence[str]) -> tuple[list[int], list[MolGraph]]:
    """Parse leniently; returns indices of the rows that parsed and their graphs."""
    keep, graphs = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, s in enumerate(smiles):
            try:
                graphs.append(parse_smiles(s))
            except SmilesError:
                continue
            keep.append(i)
    return keep, graphs


class _GraphCollection:
    smiles: list[str]
    graphs: list[MolGraph]
    _store: GraphStore | None

    def __len__(self):
        return len(self.smiles)

    @property
    def store(self) -> GraphStore:
        if self._store is None:
            self._store = GraphStore.from_graphs(self.graphs)
        return self._store


@dataclass(eq=False)
class MolDataset(_GraphCollection):
    """Molecules with a label matrix; NaN marks a missing label."""

    smiles: list[str]
    graphs: list[MolGraph]
    labels: np.ndarray
    task: TaskSpec = field(default_factory=TaskSpec)
    task_names: list[str] = field(default_factory=lambda: ["y"])
    tag: str = ""
    skipped: int = 0
    _store: GraphStore | None = field(default=None, repr=False)
    _scaffolds: list[str] | None = field(default=None, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.float64)
        self.labels = labels.reshape(len(self.smiles), -1 if labels.size else self.task.n_tasks)
        if self.labels.shape[1] != self.task.n_tasks:
            raise ConfigError(f"labels have {self.labels.shape[1]} columns, task has {self.task.n_tasks}")

    @property
    def mask(self) -> np.ndarray:
        return ~np.isnan(self.labels)

    @property
    def scaffolds(self) -> list[str]:
        if self._scaffolds is None:
            self._scaffolds = [scaffold_key(g) for g in self.graphs]
        return self._scaffolds

    def subset(self, indices, tag: str | None = None) -> "MolDataset":
        idx = np.asarray(indices, dtype=np.int64)
        out = MolDataset(
            smiles=[self.smiles[i] for i in idx],
            graphs=[self.graphs[i] for i in idx],
            labels=self.labels[idx],
            task=self.task,
            task_names=list(self.task_names),
            tag=self.tag if tag is None else tag,
        )
        if self._scaffolds is not None:
            out._scaffolds = [self._scaffolds[i] for i in idx]
        if self._store is not None and idx.size:
            out._store = self._store.subset(idx)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["smiles", *self.task_names])
            for s, row in zip(self.smiles, self.labels):
                w.writerow([s, *("" if np.isnan(v) else repr(float(v)) for v in row)])


@dataclass(eq=False)
class MolPool(_GraphCollection):
    """Unlabeled molecules."""

    smiles: list[str]
    graphs: list[MolGraph]
    skipped: int = 0
    _store: GraphStore | None = field(default=None, repr=False)

    def subset(self, indices) -> "MolPool":
        idx = np.asarray(indices, dtype=np.int64)
        out = MolPool([self.smiles[i] for i in idx], [self.graphs[i] for i in idx])
        if self._store is not None and idx.size:
            out._store = self._store.subset(idx)
        return out

    def without(self, smiles: set[str]) -> tuple["MolPool", int]:
        keep = [i for i, s in enumerate(self.smiles) if s not in smiles]
        return self.subset(keep), len(self) - len(keep)


def _parse_label(cell: str, classification: bool) -> float:
    cell = cell.strip()
    if cell == "" or cell.lower() in ("nan", "na"):
        return MISSING
    value = float(cell)
    if classification and value not in (0.0, 1.0):
        raise ConfigError(f"classification label must be 0 or 1, got {cell!r}")
    return value


def load_labeled_csv(path, smiles_column: str = "smiles", label_columns: Sequence[str] | None = None,
                     task: TaskSpec | None = None) -> MolDataset:
    """Read a CSV with a SMILES column and one column per task.

    Rows whose SMILES fail to parse, or that carry no label at all, are
    skipped and counted in ``dataset.skipped``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset(f"{path}: empty file")
        header = [h.strip() for h in header]
        if smiles_column not in header:
            raise MissingColumn(smiles_column)
        if label_columns is None:
            label_columns = [h for h in header if h != smiles_column]
        for col in label_columns:
            if col not in header:
                raise MissingColumn(col)
        if not label_columns:
            raise MissingColumn("no label columns")
        if task is None:
            task = TaskSpec("regression", len(label_columns))
        elif task.n_tasks != len(label_columns):
            raise ConfigError(f"task has {task.n_tasks} tasks but {len(label_columns)} label columns")
        si = header.index(smiles_column)
        li = [header.index(c) for c in label_columns]
        raw_smiles, raw_labels = [], []
        for row in reader:
            if not row:
                continue
            raw_smiles.append(row[si].strip())
            raw_labels.append([_parse_label(row[j] if j < len(row) else "", task.is_classification) for j in li])

    keep, graphs = parse_many(raw_smiles)
    labels = np.array(raw_labels, dtype=np.float64).reshape(len(raw_smiles), len(li))[keep]
    has_label = ~np.all(np.isnan(labels), axis=1)
    smiles = [raw_smiles[i] for i in keep]
    if not has_label.all():
        sel = np.flatnonzero(has_label)
        smiles = [smiles[i] for i in sel]
        graphs = [graphs[i] for i in sel]
        labels = labels[sel]
    if not smiles:
        raise EmptyDataset(f"{path}: no usable rows")
    return MolDataset(smiles, graphs, labels, task, list(label_columns),
                      tag=Path(path).stem, skipped=len(raw_smiles) - len(smiles))


def load_unlabeled_pool(path, smiles_column: str = "smiles") -> MolPool:
    """One SMILES per line (``.smi``/``.txt``), or a CSV with a SMILES column."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or smiles_column not in reader.fieldnames:
                raise MissingColumn(smiles_column)
            raw = [row[smiles_column].strip() for row in reader]
    else:
        raw = [line.split()[0] for line in path.read_text().splitlines() if line.strip()]
    keep, graphs = parse_many(raw)
    return MolPool([raw[i] for i in keep], graphs, skipped=len(raw) - len(keep))


def subsample_pool(pool: MolPool, size: int, seed: int) -> MolPool:
    """Uniform sample without replacement; pool order is preserved."""
    if size > len(pool):
        raise SizeExceedsPool(f"requested {size} molecules from a pool of {len(pool)}")
    if size < 0:
        raise ConfigError("size must be non-negative")
    chosen = SeededRng(seed).stream("subsample_pool").choice(len(pool), size=size, replace=False)
    return pool.subset(np.sort(chosen))
