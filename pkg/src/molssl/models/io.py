"""Model checkpoints and external embedding tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from molssl.errors import CorruptCheckpoint, DuplicateKey, MissingEmbedding, ShapeMismatch, WidthMismatch
from molssl.models.gin import TargetModel, TargetModelConfig
from molssl.models.instructor import InstructorConfig, InstructorModel
from molssl.tensorkit import load_arrays, save_arrays

_KINDS = {
    "target": (TargetModel, TargetModelConfig),
    "instructor": (InstructorModel, InstructorConfig),
}


def save_model(model, path, meta: dict | None = None) -> None:
    header_meta = {"kind": model.kind, "config": model.config.to_dict(),
                   "model_seed": model.seed, "extra": meta or {}}
    save_arrays(path, model.state_dict(), seed=model.seed, meta=header_meta)


def load_model(path, config=None):
    """Rebuild a model from a checkpoint.

    When ``config`` is given the stored architecture must match it exactly;
    any field that changes a parameter shape raises ``ShapeMismatch``.
    Returns ``(model, extra_meta)``.
    """
    import warnings

    arrays, header = load_arrays(path)
    meta = header.get("meta", {})
    kind = meta.get("kind")
    if kind not in _KINDS:
        raise CorruptCheckpoint(f"{path}: unknown model kind {kind!r}")
    cls, cfg_cls = _KINDS[kind]
    stored = cfg_cls(**meta["config"])
    if config is not None:
        if type(config) is not cfg_cls:
            raise ShapeMismatch("load_model", kind, type(config).__name__)
        diffs = {k: (v, getattr(config, k)) for k, v in stored.to_dict().items()
                 if getattr(config, k) != v}
        if diffs:
            raise ShapeMismatch("load_model", *(f"{k}={a}!={b}" for k, (a, b) in sorted(diffs.items())))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = cls(stored, seed=meta.get("model_seed", 0))
    model.load_state_dict(arrays)
    return model, meta.get("extra", {})


class EmbeddingTable:
    """Fixed-width vectors keyed by SMILES."""

    def __init__(self, vectors: dict[str, np.ndarray], width: int):
        self.vectors = vectors
        self.width = width

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, smiles):
        return smiles in self.vectors

    def lookup(self, smiles: str) -> np.ndarray:
        try:
            return self.vectors[smiles]
        except KeyError:
            raise MissingEmbedding(smiles) from None

    def lookup_many(self, smiles_list, fallback: np.ndarray | None = None) -> np.ndarray:
        """Stack vectors; rows without an entry come from ``fallback`` when given."""
        out = np.empty((len(smiles_list), self.width))
        for i, s in enumerate(smiles_list):
            vec = self.vectors.get(s)
            if vec is None:
                if fallback is None:
                    raise MissingEmbedding(s)
                vec = fallback[i]
            out[i] = vec
        return out


def _rows(path: Path):
    if path.suffix.lower() in (".jsonl", ".json"):
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    yield rec["smiles"], rec["vector"]
    else:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return
            for row in reader:
                if row:
                    yield row[0], row[1:]


def import_external_embeddings(path) -> EmbeddingTable:
    """Read ``smiles, v0, v1, ...`` CSV or ``{"smiles", "vector"}`` JSONL rows."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    width = None
    for smiles, raw in _rows(path):
        vec = np.asarray([float(v) for v in raw], dtype=np.float64)
        if width is None:
            width = vec.size
        elif vec.size != width:
            raise WidthMismatch(f"{smiles}: width {vec.size}, expected {width}")
        if smiles in vectors:
            raise DuplicateKey(smiles)
        vectors[smiles] = vec
    return EmbeddingTable(vectors, width or 0)
