"""The hybrid database: true labels plus model-assigned pseudo-labels."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from molssl.data.dataset import MolDataset
from molssl.errors import CorruptRow, DegenerateHybrid

ROW_KEYS = ("smiles", "labels", "is_pseudo", "confidence", "assignment_epoch", "source_model_id")


@dataclass
class PseudoLabels:
    """Labels a model assigned to pool molecules, in raw label units.

    For classification tasks the values are probabilities.
    """

    smiles: list[str]
    values: np.ndarray            # (M, n_tasks)
    assignment_epoch: int
    source_model_id: str
    confidence: np.ndarray | None = None   # (M, n_tasks); filled in once g has scored them

    def __len__(self):
        return len(self.smiles)


@dataclass
class HybridDatabase:
    smiles: list[str]
    labels: np.ndarray                 # (R, n_tasks), raw units, NaN = missing
    is_pseudo: np.ndarray              # (R,) bool; the complement of the observability mask
    confidence: np.ndarray             # (R, n_tasks)
    assignment_epoch: np.ndarray       # (R,) int, -1 on labeled rows
    source_model_id: list[str | None]
    collisions: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.smiles)

    @property
    def observed(self) -> np.ndarray:
        """The mask c: 1 for a true label, 0 for a pseudo-label."""
        return (~self.is_pseudo).astype(np.float64)

    @property
    def n_labeled(self) -> int:
        return int((~self.is_pseudo).sum())

    @property
    def n_pseudo(self) -> int:
        return int(self.is_pseudo.sum())

    def select(self, rows) -> "HybridDatabase":
        rows = np.asarray(rows, dtype=np.int64)
        return HybridDatabase(
            smiles=[self.smiles[i] for i in rows],
            labels=self.labels[rows],
            is_pseudo=self.is_pseudo[rows],
            confidence=self.confidence[rows],
            assignment_epoch=self.assignment_epoch[rows],
            source_model_id=[self.source_model_id[i] for i in rows],
            collisions=self.collisions,
            meta=dict(self.meta),
        )

    def filter_confidence(self, min_confidence: float) -> "HybridDatabase":
        """Rows whose lowest per-task confidence is at least ``min_confidence``.

        Labeled rows carry confidence 1, so any threshold above 1 empties
        the database.
        """
        return self.select(np.flatnonzero(self.confidence.min(axis=1) >= min_confidence))

    def require_both_kinds(self) -> None:
        if self.n_labeled == 0 or self.n_pseudo == 0:
            raise DegenerateHybrid(
                f"instructor needs labeled and pseudo rows, got {self.n_labeled} and {self.n_pseudo}")

    def __eq__(self, other):
        if not isinstance(other, HybridDatabase):
            return NotImplemented
        return (self.smiles == other.smiles
                and np.array_equal(self.labels, other.labels, equal_nan=True)
                and np.array_equal(self.is_pseudo, other.is_pseudo)
                and np.array_equal(self.confidence, other.confidence)
                and np.array_equal(self.assignment_epoch, other.assignment_epoch)
                and self.source_model_id == other.source_model_id)


def build_hybrid(labeled: MolDataset, pseudo: PseudoLabels | None) -> HybridDatabase:
    """Labeled rows first, then pseudo rows; a pseudo row whose SMILES is
    already labeled is dropped and counted in ``collisions``."""
    n_tasks = labeled.labels.shape[1]
    smiles = list(labeled.smiles)
    n = len(smiles)
    labels = [labeled.labels]
    conf = [np.ones((n, n_tasks))]
    epochs = [np.full(n, -1, dtype=np.int64)]
    sources: list[str | None] = [None] * n
    collisions = 0
    m = 0
    if pseudo is not None and len(pseudo):
        known = set(labeled.smiles)
        keep = [i for i, s in enumerate(pseudo.smiles) if s not in known]
        collisions = len(pseudo) - len(keep)
        m = len(keep)
        smiles += [pseudo.smiles[i] for i in keep]
        labels.append(np.asarray(pseudo.values, dtype=np.float64).reshape(len(pseudo), n_tasks)[keep])
        pc = (np.full((len(pseudo), n_tasks), 0.5) if pseudo.confidence is None
              else np.asarray(pseudo.confidence, dtype=np.float64).reshape(len(pseudo), n_tasks))
        conf.append(pc[keep])
        epochs.append(np.full(m, pseudo.assignment_epoch, dtype=np.int64))
        sources += [pseudo.source_model_id] * m
    return HybridDatabase(
        smiles=smiles,
        labels=np.concatenate(labels),
        is_pseudo=np.concatenate([np.zeros(n, bool), np.ones(m, bool)]),
        confidence=np.concatenate(conf),
        assignment_epoch=np.concatenate(epochs),
        source_model_id=sources,
        collisions=collisions,
    )


def _num(v: float):
    return None if math.isnan(v) else float(v)


def _row_json(db: HybridDatabase, i: int) -> str:
    pseudo = bool(db.is_pseudo[i])
    row = {
        "smiles": db.smiles[i],
        "labels": [_num(v) for v in db.labels[i]],
        "is_pseudo": pseudo,
        "confidence": [float(v) for v in db.confidence[i]],
        "assignment_epoch": int(db.assignment_epoch[i]) if pseudo else None,
        "source_model_id": db.source_model_id[i] if pseudo else None,
    }
    return json.dumps(row, allow_nan=False)


def export_hybrid(db: HybridDatabase, path) -> int:
    if len(db) == 0:
        raise DegenerateHybrid("refusing to export an empty hybrid database")
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for i in range(len(db)):
            fh.write(_row_json(db, i))
            fh.write("\n")
    tmp.replace(path)
    return len(db)


def _parse_row(line: str, lineno: int, n_tasks: int | None):
    try:
        row = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptRow(lineno, f"invalid JSON ({exc.msg})") from None
    if not isinstance(row, dict) or set(row) != set(ROW_KEYS):
        raise CorruptRow(lineno, f"expected keys {ROW_KEYS}")
    if not isinstance(row["smiles"], str) or not row["smiles"]:
        raise CorruptRow(lineno, "smiles must be a non-empty string")
    labels, conf = row["labels"], row["confidence"]
    if not isinstance(labels, list) or not isinstance(conf, list) or len(labels) != len(conf) or not labels:
        raise CorruptRow(lineno, "labels and confidence must be equal-length lists")
    if n_tasks is not None and len(labels) != n_tasks:
        raise CorruptRow(lineno, f"expected {n_tasks} tasks, got {len(labels)}")
    try:
        lab = [math.nan if v is None else float(v) for v in labels]
        cf = [float(v) for v in conf]
    except (TypeError, ValueError):
        raise CorruptRow(lineno, "non-numeric label or confidence") from None
    if any(not 0.0 <= c <= 1.0 for c in cf):
        raise CorruptRow(lineno, "confidence outside [0, 1]")
    pseudo = row["is_pseudo"]
    if not isinstance(pseudo, bool):
        raise CorruptRow(lineno, "is_pseudo must be a boolean")
    epoch, source = row["assignment_epoch"], row["source_model_id"]
    if pseudo:
        if not isinstance(epoch, int) or isinstance(epoch, bool) or epoch < 0:
            raise CorruptRow(lineno, "pseudo row needs a non-negative assignment_epoch")
        if not isinstance(source, str):
            raise CorruptRow(lineno, "pseudo row needs a source_model_id")
    elif epoch is not None or source is not None:
        raise CorruptRow(lineno, "labeled row must not carry pseudo provenance")
    return row["smiles"], lab, pseudo, cf, (epoch if pseudo else -1), source


def import_hybrid(path, min_confidence: float | None = None) -> HybridDatabase:
    """Read a hybrid JSONL file; blank lines are ignored, line numbers are 1-based."""
    rows = []
    n_tasks = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parsed = _parse_row(line, lineno, n_tasks)
            n_tasks = len(parsed[1])
            rows.append(parsed)
    if not rows:
        return HybridDatabase([], np.zeros((0, 1)), np.zeros(0, bool), np.zeros((0, 1)),
                              np.zeros(0, np.int64), [])
    db = HybridDatabase(
        smiles=[r[0] for r in rows],
        labels=np.array([r[1] for r in rows], dtype=np.float64),
        is_pseudo=np.array([r[2] for r in rows], dtype=bool),
        confidence=np.array([r[3] for r in rows], dtype=np.float64),
        assignment_epoch=np.array([r[4] for r in rows], dtype=np.int64),
        source_model_id=[r[5] for r in rows],
    )
    if min_confidence is not None:
        db = db.filter_confidence(min_confidence)
    return db
